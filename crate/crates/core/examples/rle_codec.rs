//! Bitmap to RLE to compressed string and back.

use copypaste::annotations::{compress_rle, decompress_rle};
use copypaste::{Bitmap, Rle};

fn main() -> copypaste::Result<()> {
    let mask = Bitmap::from_rows(&[
        "0000000", //
        "0011100",
        "0111110",
        "0011100",
        "0000000",
    ])?;
    let rle = Rle::from_bitmap(&mask);
    let s = compress_rle(&rle);
    println!("shape      {:?}", mask.shape());
    println!("counts     {:?}", rle.counts());
    println!("compressed {s:?}");
    println!("area {}  bbox {:?}", mask.area(), mask.tight_bbox());

    let back = decompress_rle(&s, 5, 7)?.to_bitmap();
    assert_eq!(back, mask);
    println!("round trip ok");
    Ok(())
}
