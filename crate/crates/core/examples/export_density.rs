//! Writes one density field in every supported format and reads the CSV
//! back.
//!
//!     cargo run --example export_density [dir]

use std::path::PathBuf;

use romtop::bench::{export_density, DensityField, DensityFormat};

fn main() -> Result<(), romtop::Error> {
    let dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let (nx, ny) = (30, 10);
    // A diagonal strut on a void background.
    let values: Vec<f64> = (0..nx * ny)
        .map(|e| {
            let (i, j) = ((e % nx) as f64, (e / nx) as f64);
            if (j - i * ny as f64 / nx as f64).abs() < 1.5 { 1.0 } else { 0.001 }
        })
        .collect();
    let field = DensityField::new(nx, ny, values)?;
    for format in [DensityFormat::Pgm, DensityFormat::Vtk, DensityFormat::Csv] {
        let path = dir.join(format!("strut.{}", format.extension()));
        export_density(&field, &path, format)?;
        println!("wrote {}", path.display());
    }
    let back = DensityField::from_csv(&std::fs::read_to_string(dir.join("strut.csv"))?)?;
    println!("csv round trip identical: {}", back == field);
    Ok(())
}
