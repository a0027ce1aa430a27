//! The two extension operators from the truncated temperature window
//! `[-a,a]` to the flow truncation `[-A,A]`.
//!
//! * [`extend_temperature`] reflects the temperature through the end planes
//!   with a smooth cutoff, producing a boundedly supported field that equals
//!   `T` on `[-a,a]` exactly and vanishes beyond `±(a + 2/3)`.
//! * [`extend_velocity`] extends a discretely divergence-free MAC field by a
//!   three-term reflection (coefficients `λ₁, λ₂, λ₃` chosen so value and
//!   slope match at the junction), a smooth cutoff, and an axial running-sum
//!   correction. Transverse components sample the reflections by exact cell
//!   aggregation, which keeps the *discrete* divergence of the output at
//!   rounding level, not just O(h²).

use super::grid::ChannelGrid;
use super::ops::{div_scale, divergence};
use super::scalar::ScalarField;
use super::vector::VectorField;
use crate::error::{Error, Result};
use serde::Serialize;

/// C² monotone step 0→1 on [0,1] with maximal slope 1.25: a smoothed
/// trapezoid slope profile (cubic ramps of width 0.2, constant middle).
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else if t < 0.2 {
        let s = t / 0.2;
        0.25 * (s * s * s - 0.5 * s * s * s * s)
    } else if t <= 0.8 {
        0.125 + 1.25 * (t - 0.2)
    } else {
        1.0 - smoothstep(1.0 - t)
    }
}

/// Cutoff with `φ = 1` for `x ≤ 1/3`, `φ = 0` for `x ≥ 2/3` and
/// `‖φ'‖_∞ = 3.75 ≤ 4`.
pub fn cutoff(x: f64) -> f64 {
    1.0 - smoothstep(3.0 * x - 1.0)
}

/// Reflection extension of the temperature to the flow extent.
///
/// Requires `T(-a,·) = 1` and `T(a,·) = 0` within 1e-8. The output matches
/// `T` bit-exactly on shared nodes and is supported strictly inside
/// `[-a-1, a+1]`.
pub fn extend_temperature(t: &ScalarField, grid: &ChannelGrid) -> Result<ScalarField> {
    let (ny, nz) = (t.ny, t.nz);
    if t.nxv != grid.nx_temp + 1 || (t.x0 + grid.a).abs() > 1e-12 {
        return Err(Error::GridMismatch(
            "extend_temperature expects a temperature-extent scalar".into(),
        ));
    }
    let nxt = grid.nx_temp;
    let mut worst: f64 = 0.0;
    for j in 0..ny {
        for k in 0..nz {
            worst = worst.max((t.at(0, j, k) - 1.0).abs());
            worst = worst.max(t.at(nxt, j, k).abs());
        }
    }
    if worst > 1e-8 {
        return Err(Error::BoundaryTrace(format!(
            "traces deviate by {worst:.3e} from (1, 0)"
        )));
    }

    let m = grid.margin_cells;
    let mut out = ScalarField::nodes_on_flow(grid);
    for i_f in 0..=grid.nx_flow {
        for j in 0..ny {
            for k in 0..nz {
                let v = if i_f >= m && i_f <= m + nxt {
                    t.at(i_f - m, j, k)
                } else if i_f < m {
                    // left of -a: φ(|x|-a)·(2 - T(-2a - x,·))
                    let e = m - i_f;
                    let xi = e as f64 * grid.hx;
                    let phi = cutoff(xi);
                    if phi == 0.0 || e > nxt {
                        0.0
                    } else {
                        phi * (2.0 - t.at(e, j, k))
                    }
                } else {
                    // right of a: -φ(|x|-a)·T(2a - x,·)
                    let e = i_f - (m + nxt);
                    let xi = e as f64 * grid.hx;
                    let phi = cutoff(xi);
                    if phi == 0.0 || e > nxt {
                        0.0
                    } else {
                        -phi * t.at(nxt - e, j, k)
                    }
                };
                out.set(i_f, j, k, v);
            }
        }
    }
    Ok(out)
}

/// Reflection coefficients for extension order `n`:
/// `λ₁ = (1+n)(1+n²)/n³`, `λ₂ = -(1+n²)/(n²(n-1))`, `λ₃ = (1+n)/(n³(n-1))`.
/// They satisfy `Σλᵢ = 1`, `-nλ₂ - n²λ₃ = 1`, `n²λ₂ + n⁴λ₃ = 1`.
pub fn extension_lambdas(n: u32) -> [f64; 3] {
    assert!(n >= 2);
    let nf = n as f64;
    [
        (1.0 + nf) * (1.0 + nf * nf) / nf.powi(3),
        -(1.0 + nf * nf) / (nf * nf * (nf - 1.0)),
        (1.0 + nf) / (nf.powi(3) * (nf - 1.0)),
    ]
}

/// Sup-norm amplification bound of the extension:
/// `1 + ε(n) = max(λ₁ + |λ₂| + λ₃, n|λ₂| + n²λ₃)`; the cutoff stage only
/// forms convex combinations, so the bound is attained by the raw
/// reflection mix. `ε(n)` decreases to 0 as `n → ∞`.
pub fn extension_epsilon(n: u32) -> f64 {
    let [l1, l2, l3] = extension_lambdas(n);
    let nf = n as f64;
    let axial = l1 + l2.abs() + l3;
    let transverse = nf * l2.abs() + nf * nf * l3;
    axial.max(transverse) - 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionReport {
    pub n: u32,
    pub lambdas: [f64; 3],
    /// A priori sup-amplification bound ε(n).
    pub epsilon: f64,
    /// Measured ‖Ev‖_∞ / ‖v‖_∞ on this input.
    pub sup_ratio: f64,
    /// Measured max |div Ev| scaled by (max speed / min spacing).
    pub max_div_scaled: f64,
}

/// Divergence-free extension of a MAC field from the temperature extent to
/// the flow extent, mirroring the one-end reflection construction at both
/// ends. `n ≥ 2` is the (integer) reflection order.
pub fn extend_velocity(
    v: &VectorField,
    grid: &ChannelGrid,
    n: u32,
) -> Result<(VectorField, ExtensionReport)> {
    if n < 2 {
        return Err(Error::Extension(format!("extension order must be ≥ 2, got {n}")));
    }
    if v.nx != grid.nx_temp || (v.x0 + grid.a).abs() > 1e-12 {
        return Err(Error::GridMismatch(
            "extend_velocity expects a temperature-extent field".into(),
        ));
    }
    let div_in = divergence(v).max_abs();
    let scale = div_scale(v);
    if div_in > 1e-8 * scale {
        return Err(Error::Extension(format!(
            "input is not discretely divergence-free: max|div| = {div_in:.3e} (scaled tolerance {:.3e})",
            1e-8 * scale
        )));
    }

    let nxt = grid.nx_temp;
    let (ny, nz) = (v.ny, v.nz);
    let hx = grid.hx;
    let zone_len = grid.a / (n * n) as f64;
    let support_len = 2.0 * grid.a / (3 * n * n) as f64;
    let e_zone = (zone_len / hx + 1e-12).floor() as usize;
    if e_zone < 2 {
        return Err(Error::Extension(format!(
            "grid too coarse for extension order {n}: zone {zone_len:.4} holds {e_zone} cells (need ≥ 2)"
        )));
    }
    let e_use = e_zone.min(grid.margin_cells);
    if (e_use as f64) * hx < support_len - 1e-12 {
        return Err(Error::Extension(format!(
            "flow margin too small for extension order {n}: cutoff support {support_len:.4} exceeds {} cells",
            e_use
        )));
    }
    let [l1, l2, l3] = extension_lambdas(n);
    let nn = n as usize;
    let nn2 = nn * nn;
    let phi = |e_half_steps: usize| -> f64 {
        // cutoff sampled at multiples of hx/2 over [0, support_len]
        let xi = e_half_steps as f64 * 0.5 * hx;
        if xi >= support_len {
            0.0
        } else {
            1.0 - smoothstep(xi / support_len)
        }
    };

    let m = grid.margin_cells;
    let mut out = VectorField::zeros_on_flow(grid);
    let o1 = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
    let o2 = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * nz + k;
    let o3 = |i: usize, j: usize, k: usize| (i * ny + j) * (nz + 1) + k;

    // interior copy, bit-exact
    for i in 0..=nxt {
        for j in 0..ny {
            for k in 0..nz {
                out.u1[o1(i + m, j, k)] = v.u1[v.i1(i, j, k)];
            }
        }
    }
    for i in 0..nxt {
        for j in 0..=ny {
            for k in 0..nz {
                out.u2[o2(i + m, j, k)] = v.u2[v.i2(i, j, k)];
            }
        }
    }
    for i in 0..nxt {
        for j in 0..ny {
            for k in 0..=nz {
                out.u3[o3(i + m, j, k)] = v.u3[v.i3(i, j, k)];
            }
        }
    }

    let cross = ny * nz;
    // raw axial reflection mix at extension node distance e (e = 0 is the
    // junction itself)
    let raw1_right = |e: usize, j: usize, k: usize| -> f64 {
        l1 * v.u1[v.i1(nxt, j, k)]
            + l2 * v.u1[v.i1(nxt - nn * e, j, k)]
            + l3 * v.u1[v.i1(nxt - nn2 * e, j, k)]
    };
    let raw1_left = |e: usize, j: usize, k: usize| -> f64 {
        l1 * v.u1[v.i1(0, j, k)]
            + l2 * v.u1[v.i1(nn * e, j, k)]
            + l3 * v.u1[v.i1(nn2 * e, j, k)]
    };

    // ---- right end ----
    {
        let jf = m + nxt; // junction flow node
        let mut w = vec![0.0; cross];
        let mut raw_prev: Vec<f64> = (0..cross)
            .map(|p| raw1_right(0, p / nz, p % nz))
            .collect();
        for e in 1..=e_use {
            let (phi_prev, phi_half, phi_cur) =
                (phi(2 * (e - 1)), phi(2 * e - 1), phi(2 * e));
            for j in 0..ny {
                for k in 0..nz {
                    let p = j * nz + k;
                    let raw = raw1_right(e, j, k);
                    w[p] -= (phi_cur - phi_half) * raw + (phi_half - phi_prev) * raw_prev[p];
                    out.u1[o1(jf + e, j, k)] = phi_cur * raw + w[p];
                    raw_prev[p] = raw;
                }
            }
            // transverse components on the extension cell jf + e - 1:
            // exact aggregation of the n (resp. n²) image cells
            let cell = jf + e - 1;
            for j in 0..=ny {
                for k in 0..nz {
                    let mut s2 = 0.0;
                    for r in 1..=nn {
                        s2 += v.u2[v.i2(nxt - nn * (e - 1) - r, j, k)];
                    }
                    let mut s3 = 0.0;
                    for r in 1..=nn2 {
                        s3 += v.u2[v.i2(nxt - nn2 * (e - 1) - r, j, k)];
                    }
                    out.u2[o2(cell, j, k)] = phi_half * (-l2 * s2 - l3 * s3);
                }
            }
            for j in 0..ny {
                for k in 0..=nz {
                    let mut s2 = 0.0;
                    for r in 1..=nn {
                        s2 += v.u3[v.i3(nxt - nn * (e - 1) - r, j, k)];
                    }
                    let mut s3 = 0.0;
                    for r in 1..=nn2 {
                        s3 += v.u3[v.i3(nxt - nn2 * (e - 1) - r, j, k)];
                    }
                    out.u3[o3(cell, j, k)] = phi_half * (-l2 * s2 - l3 * s3);
                }
            }
        }
        // constant axial tail beyond the zone
        for e in (e_use + 1)..=grid.margin_cells {
            for j in 0..ny {
                for k in 0..nz {
                    out.u1[o1(jf + e, j, k)] = w[j * nz + k];
                }
            }
        }
    }

    // ---- left end (mirror) ----
    {
        let mut w = vec![0.0; cross];
        let mut raw_prev: Vec<f64> = (0..cross)
            .map(|p| raw1_left(0, p / nz, p % nz))
            .collect();
        for e in 1..=e_use {
            let (phi_prev, phi_half, phi_cur) =
                (phi(2 * (e - 1)), phi(2 * e - 1), phi(2 * e));
            for j in 0..ny {
                for k in 0..nz {
                    let p = j * nz + k;
                    let raw = raw1_left(e, j, k);
                    w[p] += (phi_prev - phi_half) * raw_prev[p] + (phi_half - phi_cur) * raw;
                    out.u1[o1(m - e, j, k)] = phi_cur * raw + w[p];
                    raw_prev[p] = raw;
                }
            }
            let cell = m - e;
            for j in 0..=ny {
                for k in 0..nz {
                    let mut s2 = 0.0;
                    for r in 0..nn {
                        s2 += v.u2[v.i2(nn * (e - 1) + r, j, k)];
                    }
                    let mut s3 = 0.0;
                    for r in 0..nn2 {
                        s3 += v.u2[v.i2(nn2 * (e - 1) + r, j, k)];
                    }
                    out.u2[o2(cell, j, k)] = phi_half * (-l2 * s2 - l3 * s3);
                }
            }
            for j in 0..ny {
                for k in 0..=nz {
                    let mut s2 = 0.0;
                    for r in 0..nn {
                        s2 += v.u3[v.i3(nn * (e - 1) + r, j, k)];
                    }
                    let mut s3 = 0.0;
                    for r in 0..nn2 {
                        s3 += v.u3[v.i3(nn2 * (e - 1) + r, j, k)];
                    }
                    out.u3[o3(cell, j, k)] = phi_half * (-l2 * s2 - l3 * s3);
                }
            }
        }
        for e in (e_use + 1)..=grid.margin_cells {
            for j in 0..ny {
                for k in 0..nz {
                    out.u1[o1(m - e, j, k)] = w[j * nz + k];
                }
            }
        }
    }

    let sup_in = v.sup_norm();
    let report = ExtensionReport {
        n,
        lambdas: [l1, l2, l3],
        epsilon: extension_epsilon(n),
        sup_ratio: if sup_in > 0.0 {
            out.sup_norm() / sup_in
        } else {
            1.0
        },
        max_div_scaled: divergence(&out).max_abs() / div_scale(&out).max(1e-300),
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::project::PoissonContext;
    use crate::geometry::CrossSection;
    use std::sync::Arc;

    fn grid(a: f64, cells: usize) -> ChannelGrid {
        let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 6, 6).unwrap());
        ChannelGrid::new(cross, a, cells, 4.0).unwrap()
    }

    #[test]
    fn smoothstep_profile() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        // max slope 1.25 (sampled)
        let mut max_slope = 0.0f64;
        for i in 0..10_000 {
            let t = i as f64 / 10_000.0;
            max_slope = max_slope.max((smoothstep(t + 1e-6) - smoothstep(t)) / 1e-6);
        }
        assert!(max_slope <= 1.25 + 1e-4, "slope {max_slope}");
        // cutoff obeys the slope-4 budget
        let mut max_phi = 0.0f64;
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            max_phi = max_phi.max((cutoff(x) - cutoff(x + 1e-6)).abs() / 1e-6);
        }
        assert!(max_phi <= 4.0, "cutoff slope {max_phi}");
        assert_eq!(cutoff(1.0 / 3.0 - 1e-9), 1.0);
        assert_eq!(cutoff(2.0 / 3.0 + 1e-9), 0.0);
    }

    fn planar_temperature(g: &ChannelGrid) -> ScalarField {
        let mut t = ScalarField::nodes_on_temp(g);
        let a = g.a;
        t.fill_from(|x, _, _| (a - x) / (2.0 * a));
        t
    }

    #[test]
    fn temperature_extension_matches_inside_and_decays() {
        let g = grid(2.0, 24);
        let t = planar_temperature(&g);
        let tt = extend_temperature(&t, &g).unwrap();
        let m = g.margin_cells;
        // exact on shared nodes
        for i in 0..=g.nx_temp {
            assert_eq!(
                tt.at(i + m, 2, 3).to_bits(),
                t.at(i, 2, 3).to_bits()
            );
        }
        // zero beyond ±(a + 2/3); in particular at x = -a-1
        for i in 0..=g.nx_flow {
            let x = g.x_flow(i);
            if x < -g.a - 2.0 / 3.0 - 1e-9 || x > g.a + 2.0 / 3.0 + 1e-9 {
                assert_eq!(tt.at(i, 1, 1), 0.0, "support leak at x={x}");
            }
        }
        // continuity at the junction: first extension node is close to the
        // reflected branch value φ(hx)(2 - T(-a+hx))
        let e1 = tt.at(m - 1, 0, 0);
        let expect = cutoff(g.hx) * (2.0 - t.at(1, 0, 0));
        assert!((e1 - expect).abs() < 1e-14);
    }

    #[test]
    fn temperature_extension_rejects_bad_traces() {
        let g = grid(2.0, 24);
        let mut t = ScalarField::nodes_on_temp(&g);
        t.fill_from(|x, _, _| x); // traces are (-a, a), not (1, 0)
        assert!(matches!(
            extend_temperature(&t, &g),
            Err(Error::BoundaryTrace(_))
        ));
    }

    #[test]
    fn lambda_identities() {
        for n in [2u32, 4, 8] {
            let [l1, l2, l3] = extension_lambdas(n);
            let nf = n as f64;
            assert!((l1 + l2 + l3 - 1.0).abs() < 1e-12, "sum at n={n}");
            assert!((-nf * l2 - nf * nf * l3 - 1.0).abs() < 1e-12, "slope at n={n}");
            assert!(
                (nf * nf * l2 + nf.powi(4) * l3 - 1.0).abs() < 1e-12,
                "curvature at n={n}"
            );
        }
        let [l1, l2, l3] = extension_lambdas(2);
        assert!((l1 - 15.0 / 8.0).abs() < 1e-15);
        assert!((l2 + 5.0 / 4.0).abs() < 1e-15);
        assert!((l3 - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn epsilon_decreases() {
        let e2 = extension_epsilon(2);
        let e4 = extension_epsilon(4);
        let e8 = extension_epsilon(8);
        assert!(e2 > e4 && e4 > e8, "{e2} {e4} {e8}");
        assert!(e8 < 0.4, "ε(8) = {e8}");
    }

    /// Random-ish smooth field made discretely divergence-free by projection.
    fn divfree_field(g: &ChannelGrid) -> VectorField {
        let mut v = VectorField::zeros_on_temp(g);
        v.fill_from(
            |x, y, z| (0.7 * x).sin() * (1.0 + y) + z,
            |x, y, z| (0.3 * x).cos() * y * (0.5 - z),
            |x, y, z| 0.5 * (x + y * z).cos(),
        );
        v.enforce_normal_bc();
        let ctx = PoissonContext::for_field(&v);
        let (p, _, _) = ctx.project(&v, 1e-12).unwrap();
        p
    }

    #[test]
    fn extension_restricts_exactly_and_is_divfree() {
        let g = grid(2.0, 64);
        let v = divfree_field(&g);
        for n in [2u32, 4] {
            let (ev, rep) = extend_velocity(&v, &g, n).unwrap();
            // (i) restriction property, bit-exact
            let back = ev.restrict_to_temp(&g);
            assert_eq!(back.max_diff(&v), 0.0, "restriction at n={n}");
            // (ii) discrete divergence at rounding level
            assert!(
                rep.max_div_scaled < 1e-10,
                "divergence {:.3e} at n={n}",
                rep.max_div_scaled
            );
            // (iii) sup bound
            assert!(
                rep.sup_ratio <= 1.0 + rep.epsilon + 1e-12,
                "sup ratio {} vs 1+ε = {}",
                rep.sup_ratio,
                1.0 + rep.epsilon
            );
        }
    }

    #[test]
    fn extension_of_zero_is_zero() {
        let g = grid(2.0, 64);
        let v = VectorField::zeros_on_temp(&g);
        let (ev, _) = extend_velocity(&v, &g, 2).unwrap();
        assert_eq!(ev.max_abs(), 0.0);
    }

    #[test]
    fn extension_rejects_non_solenoidal_input() {
        let g = grid(2.0, 64);
        let mut v = VectorField::zeros_on_temp(&g);
        v.fill_from(|x, _, _| x, |_, _, _| 0.0, |_, _, _| 0.0);
        assert!(matches!(
            extend_velocity(&v, &g, 2),
            Err(Error::Extension(_))
        ));
    }

    #[test]
    fn extension_rejects_coarse_grids() {
        // zone a/n² = 2/64 barely under 2 cells at hx = 1/8
        let g = grid(2.0, 32);
        let v = VectorField::zeros_on_temp(&g);
        assert!(matches!(
            extend_velocity(&v, &g, 8),
            Err(Error::Extension(_))
        ));
    }
}
