//! Linear sparse-recovery sketch: insert, cancel, merge and recover.

use powercut::sketch::{SketchParams, SparseRecoverySketch};

fn main() -> powercut::error::Result<()> {
    let params = SketchParams::new(1024, 16, 1e-3, 42)?;
    println!(
        "{} rows x {} buckets, {} bytes",
        params.rows(),
        params.buckets_per_row(),
        params.memory_bytes()
    );

    let mut a = SparseRecoverySketch::new(params)?;
    let mut b = SparseRecoverySketch::new(params)?;
    for i in [3, 70, 511, 900] {
        a.update(i, 1)?;
    }
    // noise that cancels out
    for i in 0..200 {
        b.update(i * 5, 2)?;
        b.update(i * 5, -2)?;
    }
    b.update(70, 1)?;
    let merged = a.merge(&b)?;
    println!("recovered: {:?}", merged.recover());

    // 4k nonzeros is beyond the budget
    let mut dense = SparseRecoverySketch::new(params)?;
    for i in 0..64 {
        dense.update(i, 1)?;
    }
    println!("64 nonzeros: {:?}", dense.recover());
    Ok(())
}
