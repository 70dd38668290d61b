//! Writes the sample table and a JSON vertex mesh.
use hyperforge::hypersurface;
use hyperforge::pipeline::{self, ExportFormat, RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    let k = pipeline::construct(&RunConfig::new(SpaceName::Cp2, 4.0))?;
    let samples = hypersurface::sample_hypersurface(&k.curve, (8, 6), 1e-4)?;
    let rows = hypersurface::samples_to_rows(&samples);
    let dir = std::env::temp_dir().join("hyperforge-export");
    for (format, name) in [(ExportFormat::Csv, "samples.csv"), (ExportFormat::JsonMesh, "mesh.json")] {
        let bytes = pipeline::export_bytes(&rows, format)?;
        pipeline::write_atomic(&dir.join(name), &bytes)?;
        println!("{} ({} bytes)", dir.join(name).display(), bytes.len());
    }
    Ok(())
}
