//! Regenerates `fixtures/worked/{g,g2}.txt` from the named difference.

use std::path::Path;

use switchchain::worked::{difference, smallest_completion, N};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = difference()?;
    let (d, g, g2) = smallest_completion(&h)?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("g.txt"), g.to_text())?;
    std::fs::write(dir.join("g2.txt"), g2.to_text())?;
    println!("n = {N}, d = {d}, |H| = {}", h.len());
    Ok(())
}
