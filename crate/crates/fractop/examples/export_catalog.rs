//! Writes every built-in system as `<dir>/<stem>.json` (default `data/`).

use std::path::PathBuf;

use fractop::samples::catalog;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    for (stem, spec) in catalog() {
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, spec.to_json() + "\n")?;
        println!("{}", path.display());
    }
    Ok(())
}
