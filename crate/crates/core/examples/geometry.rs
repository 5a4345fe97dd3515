//! Box overlap measures and the weighted box loss.
//!
//!     cargo run --example geometry

use tabgrid::{giou, iou, l_box, to_corner, BBox, NormBox};

fn main() -> tabgrid::Result<()> {
    let a = BBox::new(0.0, 0.0, 10.0, 10.0)?;
    let b = BBox::new(5.0, 5.0, 15.0, 15.0)?;
    let far = BBox::new(30.0, 0.0, 40.0, 10.0)?;
    println!("iou(a, b)    = {:.4}", iou(&a, &b));
    println!("giou(a, b)   = {:.4}", giou(&a, &b)?);
    println!("iou(a, far)  = {:.4}", iou(&a, &far));
    println!("giou(a, far) = {:.4}", giou(&a, &far)?);

    let left = NormBox::new(0.25, 0.5, 0.5, 1.0)?;
    let right = NormBox::new(0.75, 0.5, 0.5, 1.0)?;
    println!(
        "left half in a 640x480 image: {:?}",
        to_corner(&left, 640.0, 480.0)?.corners()
    );
    println!(
        "l_box(left, right, 2, 5) = {:.4}",
        l_box(&left, &right, 2.0, 5.0)?
    );
    Ok(())
}
