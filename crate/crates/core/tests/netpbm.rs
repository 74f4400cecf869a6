//! The netpbm reader against the `image` crate's decoder.

use hogpipe::ingest::{decode_image, decode_netpbm, GrayFrame, Layout};
use hogpipe::HogError;
use image::ImageFormat;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn encode(magic: &str, w: usize, h: usize, header_noise: bool, raster: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    if header_noise {
        out.extend_from_slice(format!("{magic}\n# made by a test\n{w}   {h}\n#another\n255\n").as_bytes());
    } else {
        out.extend_from_slice(format!("{magic} {w} {h} 255\n").as_bytes());
    }
    out.extend_from_slice(raster);
    out
}

#[test]
fn agrees_with_reference_decoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..40 {
        let (w, h) = (rng.gen_range(3..50), rng.gen_range(3..50));
        let colour = i % 2 == 1;
        let channels = if colour { 3 } else { 1 };
        let mut raster = vec![0u8; w * h * channels];
        rng.fill_bytes(&mut raster);
        let bytes = encode(if colour { "P6" } else { "P5" }, w, h, i % 3 == 0, &raster);

        let ours = decode_netpbm(&bytes).unwrap();
        let theirs = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm).unwrap();
        assert_eq!((ours.width(), ours.height()), (theirs.width() as usize, theirs.height() as usize));
        let expected = if colour { theirs.to_rgb8().into_raw() } else { theirs.to_luma8().into_raw() };
        assert_eq!(ours.data(), &expected[..]);
        assert_eq!(ours.layout(), if colour { Layout::Rgb8 } else { Layout::Gray8 });
    }
}

#[test]
fn written_pgm_reads_back_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frame.pgm");
    let frame = GrayFrame::from_fn(37, 21, |x, y| (x * 7 + y * 3) as u8);
    frame.write_pgm(&path).unwrap();
    let back = decode_image(&path).unwrap().to_gray().unwrap();
    assert_eq!(back, frame);
    let theirs = image::open(&path).unwrap().to_luma8();
    assert_eq!(theirs.into_raw(), frame.luma());
}

#[test]
fn rejects_what_it_does_not_support() {
    let ascii = b"P2\n2 1\n255\n0 1\n";
    assert!(matches!(decode_netpbm(ascii), Err(HogError::Format(_))));
    let deep = b"P5\n1 1\n65535\n\x00\x00";
    assert!(matches!(decode_netpbm(deep), Err(HogError::Format(_))));
    let short = encode("P6", 4, 4, false, &[0; 47]);
    assert!(matches!(decode_netpbm(&short), Err(HogError::Format(_))));
    assert!(matches!(decode_netpbm(b""), Err(HogError::Format(_))));
    assert!(matches!(decode_image("/nonexistent/frame.pgm"), Err(HogError::Io(_))));
}
