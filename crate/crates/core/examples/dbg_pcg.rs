use bqwave::fields::{ChannelGrid, PoissonContext, VectorField};
use bqwave::geometry::CrossSection;
use std::sync::Arc;

fn main() {
    let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 6, 6).unwrap());
    let g = Arc::new(ChannelGrid::new(cross, 2.0, 16, 2.0).unwrap());
    let mut v = VectorField::zeros_on_flow(&g);
    v.fill_from(
        |x, y, z| 0.2 * (x * 0.5).cos() * (y + z),
        |_, y, z| 0.1 * (y * y - z),
        |x, _, z| 0.05 * (x + z),
    );
    let ctx = PoissonContext::on_flow(&g);
    match ctx.project(&v, 1e-13) {
        Ok((_, _, stats)) => println!("converged in {} iters, residual {:.3e}", stats.iterations, stats.residual),
        Err(e) => println!("FAILED: {e}"),
    }
    // try looser tolerance
    match ctx.project(&v, 1e-10) {
        Ok((_, _, stats)) => println!("1e-10: converged in {} iters, residual {:.3e}", stats.iterations, stats.residual),
        Err(e) => println!("1e-10 FAILED: {e}"),
    }
}
