//! Leaf-to-leaf distances and the Gauss and Codazzi residuals.
use hyperforge::hypersurface::{self, Hypersurface};
use hyperforge::pipeline::{self, RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    let k = pipeline::construct(&RunConfig::new(SpaceName::Cp2, 4.0))?;
    let samples = hypersurface::sample_hypersurface(&k.curve, (11, 6), 1e-4)?;
    let t0 = samples[0].params.0;
    for s in samples.iter().step_by(36).skip(1) {
        let e = hypersurface::check_equidistance(&k.space, &samples, t0, s.params.0)?;
        println!("t = {:.3}: mean distance {:.6}, spread/mean {:.1e}", s.params.0, e.mean, e.relative_spread);
    }
    let hs = Hypersurface::new(&k.curve, 1e-3)?;
    let s = hs.sample(100, (0.7, 2.1))?;
    for h in [1e-3, 5e-4, 2.5e-4] {
        let r = hypersurface::gauss_codazzi_residual(&hs, &s, h, None)?;
        println!("h = {h:.1e}: Gauss {:.2e}, Codazzi {:.2e}", r.gauss, r.codazzi);
    }
    Ok(())
}
