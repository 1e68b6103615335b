//! Cell-indicator quadrature over balls, slabs, hyperplane slices and lines.
//!
//! Every node owns the cube of side `h` centred on it (cut to the domain on
//! zero-flux faces). Cells entirely inside or outside a ball contribute
//! fully or not at all; cells cut by the sphere or by a slab plane are
//! resolved by `supersample^dim` subcell midpoints.

use super::{Boundary, Grid, Region, ScalarField};
use crate::error::{Error, Result};
use crate::exec;

/// A ball `B_radius(center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

/// One sample of [`line_sample`]; `t` is the arc length from the base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSample {
    pub t: f64,
    pub value: f64,
}

const MARGIN_CELLS: f64 = 2.0;

pub(crate) fn check_ball_inside(grid: &Grid, center: &[f64; 3], radius: f64) -> Result<()> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::arg(format!("ball radius {radius} must be finite and nonnegative")));
    }
    let margin = MARGIN_CELLS * grid.h();
    let up = grid.upper();
    for a in 0..grid.dim() {
        let lo_gap = center[a] - radius - grid.lower()[a];
        let hi_gap = up[a] - center[a] - radius;
        let gap = lo_gap.min(hi_gap);
        if gap < margin * (1.0 - 1e-9) {
            return Err(Error::RegionOutOfDomain(format!(
                "ball of radius {radius} at {:?} is {gap:.3e} from the boundary along axis {a}; \
                 required margin is 2h = {margin:.3e}",
                &center[..grid.dim()]
            )));
        }
    }
    Ok(())
}

fn check_supersample(supersample: usize) -> Result<()> {
    if supersample == 0 {
        return Err(Error::arg("supersample must be at least 1"));
    }
    Ok(())
}

fn check_ascending(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::arg("radius list is empty"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("radii must be strictly ascending"));
    }
    Ok(())
}

/// `∫_region field` by cell quadrature.
pub fn integrate(field: &ScalarField, region: &Region, supersample: usize) -> Result<f64> {
    check_supersample(supersample)?;
    let g = field.grid();
    match region {
        Region::Whole => Ok(whole_sum(g, field.values())),
        Region::Ball { center, radius } => {
            check_ball_inside(g, center, *radius)?;
            Ok(ball_profiles_raw(g, &[field.values()], center, &[*radius], None, supersample)[0][0])
        }
        Region::SlabBall { center, radius, t1, t2 } => {
            if !(t1 < t2) {
                return Err(Error::arg(format!("degenerate slab [{t1}, {t2}]")));
            }
            check_ball_inside(g, center, *radius)?;
            Ok(ball_profiles_raw(
                g,
                &[field.values()],
                center,
                &[*radius],
                Some((*t1, *t2)),
                supersample,
            )[0][0])
        }
        Region::PlaneSlice { t3, within } => match within {
            Some(ball) => {
                Ok(plane_disk_profiles(&[field], *t3, &ball.center, &[ball.radius], supersample)?[0][0])
            }
            None => {
                let plane = plane_values(g, field.values(), *t3)?;
                match g.hyperplane() {
                    Some(hg) => Ok(whole_sum(&hg, &plane)),
                    None => Ok(plane[0]),
                }
            }
        },
        Region::Line { base, direction } => {
            let len = norm(direction);
            let samples = ((len / (0.25 * g.h())).ceil() as usize + 1).max(2);
            let s = line_sample(field, *base, *direction, samples)?;
            let ys: Vec<f64> = s.iter().map(|p| p.value).collect();
            Ok(crate::quad::trapezoid(&ys, len / (samples - 1) as f64))
        }
    }
}

/// `∫_Ω` of nodal values with trapezoid node weights.
pub fn whole_sum(g: &Grid, values: &[f64]) -> f64 {
    let cv = g.cell_volume();
    exec::sum(values.len(), |i| g.node_weight(g.multi_index(i)) * values[i]) * cv
}

/// `(r, ∫_{B_r(center)} field)` for every radius, from one pass over cells.
pub fn cumulative_ball_profile(
    field: &ScalarField,
    center: [f64; 3],
    radii: &[f64],
    supersample: usize,
) -> Result<Vec<(f64, f64)>> {
    let p = cumulative_ball_profiles(&[field], center, radii, None, supersample)?;
    Ok(radii.iter().copied().zip(p[0].iter().copied()).collect())
}

/// Ball (or slab-ball) integrals of several fields at once: `out[field][radius]`.
///
/// `slab = Some((t1, t2))` restricts every ball to `t1 ≤ x_last ≤ t2`.
pub fn cumulative_ball_profiles(
    fields: &[&ScalarField],
    center: [f64; 3],
    radii: &[f64],
    slab: Option<(f64, f64)>,
    supersample: usize,
) -> Result<Vec<Vec<f64>>> {
    check_supersample(supersample)?;
    check_ascending(radii)?;
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let g = first.grid();
    for f in fields {
        g.check_same(f.grid())?;
    }
    if let Some((t1, t2)) = slab {
        if !(t1 < t2) {
            return Err(Error::arg(format!("degenerate slab [{t1}, {t2}]")));
        }
    }
    check_ball_inside(g, &center, *radii.last().unwrap())?;
    let raw: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
    Ok(ball_profiles_raw(g, &raw, &center, radii, slab, supersample))
}

/// Index ranges (inclusive) of the nodes whose cells can meet `B_r(center)`.
fn bounding_box(g: &Grid, center: &[f64; 3], r: f64) -> [(usize, usize); 3] {
    let mut bb = [(0usize, 0usize); 3];
    for a in 0..g.dim() {
        let n = g.points()[a];
        let lo = ((center[a] - r - g.lower()[a]) / g.h()).floor() - 1.0;
        let hi = ((center[a] + r - g.lower()[a]) / g.h()).ceil() + 1.0;
        bb[a] = (lo.max(0.0) as usize, (hi.max(0.0) as usize).min(n - 1));
    }
    bb
}

pub(crate) fn ball_profiles_raw(
    g: &Grid,
    fields: &[&[f64]],
    center: &[f64; 3],
    radii: &[f64],
    slab: Option<(f64, f64)>,
    supersample: usize,
) -> Vec<Vec<f64>> {
    let nf = fields.len();
    let nr = radii.len();
    let dim = g.dim();
    let h = g.h();
    let r_max = *radii.last().unwrap();
    let half_diag = 0.5 * h * (dim as f64).sqrt();
    let cell_volume = g.cell_volume();
    let bb = bounding_box(g, center, r_max);
    let n1 = bb[1].1 - bb[1].0 + 1;
    let n2 = bb[2].1 - bb[2].0 + 1;
    let rows = n1 * n2;
    let last = dim - 1;

    // Subcell offsets in units of h.
    let ss = supersample;
    let nsub = ss.pow(dim as u32);
    let offsets: Vec<[f64; 3]> = (0..nsub)
        .map(|k| {
            let mut o = [0.0; 3];
            let mut rem = k;
            for c in o.iter_mut().take(dim) {
                *c = ((rem % ss) as f64 + 0.5) / ss as f64 - 0.5;
                rem /= ss;
            }
            o
        })
        .collect();

    // Layout: [partial | start] × field × radius.
    let width = 2 * nf * nr;
    let acc = exec::reduce(rows, width, |row, acc| {
        let i1 = bb[1].0 + row % n1;
        let i2 = bb[2].0 + row / n1;
        let mut sub_dist = vec![0.0; nsub];
        let mut sub_in_slab = vec![true; nsub];
        for i0 in bb[0].0..=bb[0].1 {
            let m = [i0, i1, i2];
            let idx = g.index(m);
            let x = g.coord(idx);
            let dist = dist3(&x, center);
            if dist - half_diag > r_max {
                continue;
            }
            let mut slab_frac = 1.0;
            let mut straddles_slab = false;
            if let Some((t1, t2)) = slab {
                let y = x[last];
                let (lo, hi) = (y - 0.5 * h, y + 0.5 * h);
                if hi <= t1 || lo >= t2 {
                    continue;
                }
                if lo < t1 || hi > t2 {
                    straddles_slab = true;
                    slab_frac = (hi.min(t2) - lo.max(t1)) / h;
                }
            }
            // Cells far enough from the centre see the sphere as a plane; their
            // cut fraction is the exact cube/half-space volume, which is smooth
            // in r. Cells near the centre or also cut by a slab plane are
            // resolved by subcell sampling.
            let planar = dist >= 2.0 * h;
            let mut widths = [0.0; 3];
            let mut half_extent = half_diag;
            if planar {
                for a in 0..dim {
                    widths[a] = ((x[a] - center[a]) / dist).abs() * h;
                }
                half_extent = 0.5 * widths[..dim].iter().sum::<f64>();
            }
            let k_part = radii.partition_point(|&r| r <= dist - half_extent);
            let k_full = radii.partition_point(|&r| r < dist + half_extent);
            let w = g.node_weight(m) * cell_volume;
            if k_part < k_full {
                let sampled = straddles_slab || !planar;
                if sampled {
                    for (s, o) in offsets.iter().enumerate() {
                        let mut p = x;
                        for a in 0..dim {
                            p[a] += o[a] * h;
                        }
                        sub_dist[s] = dist3(&p, center);
                        sub_in_slab[s] = match slab {
                            Some((t1, t2)) => p[last] >= t1 && p[last] <= t2,
                            None => true,
                        };
                    }
                }
                for k in k_part..k_full {
                    let r = radii[k];
                    let frac = if sampled {
                        let inside = (0..nsub).filter(|&s| sub_in_slab[s] && sub_dist[s] <= r).count();
                        inside as f64 / nsub as f64
                    } else {
                        box_halfspace_fraction(&widths[..dim], r - dist + half_extent, h)
                    };
                    if frac == 0.0 {
                        continue;
                    }
                    for (f, vals) in fields.iter().enumerate() {
                        acc[f * nr + k] += w * frac * vals[idx];
                    }
                }
            }
            if k_full < nr && slab_frac > 0.0 {
                for (f, vals) in fields.iter().enumerate() {
                    acc[nf * nr + f * nr + k_full] += w * slab_frac * vals[idx];
                }
            }
        }
    });

    (0..nf)
        .map(|f| {
            let mut running = 0.0;
            (0..nr)
                .map(|k| {
                    running += acc[nf * nr + f * nr + k];
                    running + acc[f * nr + k]
                })
                .collect()
        })
        .collect()
}

/// Fraction of a box with side lengths `widths` (along a unit normal) lying
/// below level `t`, i.e. the CDF at `t` of a sum of independent uniforms on
/// `[0, w_a]`. Widths below `1e−4·h` are folded into a shift by their mean.
fn box_halfspace_fraction(widths: &[f64], t: f64, h: f64) -> f64 {
    let mut w = [0.0; 3];
    let mut k = 0;
    let mut t = t;
    for &wi in widths {
        if wi < 1e-4 * h {
            t -= 0.5 * wi;
        } else {
            w[k] = wi;
            k += 1;
        }
    }
    let total: f64 = w[..k].iter().sum();
    if t <= 0.0 {
        return 0.0;
    }
    if t >= total {
        return 1.0;
    }
    let mut acc = 0.0;
    for subset in 0..(1usize << k) {
        let shift: f64 = (0..k).filter(|&i| subset >> i & 1 == 1).map(|i| w[i]).sum();
        let base = t - shift;
        if base > 0.0 {
            let sign = if subset.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * base.powi(k as i32);
        }
    }
    let norm: f64 = w[..k].iter().product::<f64>() * (1..=k).product::<usize>() as f64;
    (acc / norm).clamp(0.0, 1.0)
}

#[inline]
fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[inline]
fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Radial derivative `(r, d/dr ∫_{B_r})` of a cumulative ball profile.
///
/// Central differences at interior radii, second-order one-sided stencils at
/// the two ends. Radii must be uniformly spaced.
pub fn boundary_profile(cumulative: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let radii: Vec<f64> = cumulative.iter().map(|p| p.0).collect();
    let values: Vec<f64> = cumulative.iter().map(|p| p.1).collect();
    let d = radial_derivative(&radii, &values)?;
    Ok(radii.into_iter().zip(d).collect())
}

pub(crate) fn uniform_step(radii: &[f64]) -> Result<f64> {
    if radii.len() < 3 {
        return Err(Error::arg(format!("need at least 3 radii, got {}", radii.len())));
    }
    let dr = radii[1] - radii[0];
    if !(dr > 0.0) {
        return Err(Error::arg("radii must be strictly ascending"));
    }
    for w in radii.windows(2) {
        if ((w[1] - w[0]) - dr).abs() > 1e-6 * dr {
            return Err(Error::arg("radii must be uniformly spaced"));
        }
    }
    Ok(dr)
}

pub(crate) fn radial_derivative(radii: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let dr = uniform_step(radii)?;
    let n = values.len();
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dr)
            } else if k + 1 == n {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dr)
            } else {
                (values[k + 1] - values[k - 1]) / (2.0 * dr)
            }
        })
        .collect())
}

pub(crate) fn check_point_inside(g: &Grid, x: &[f64; 3]) -> Result<()> {
    let up = g.upper();
    let tol = 1e-9 * g.h();
    for a in 0..g.dim() {
        let hi = match g.boundary() {
            Boundary::ZeroFlux => up[a],
            Boundary::Periodic => up[a],
        };
        if x[a] < g.lower()[a] - tol || x[a] > hi + tol {
            return Err(Error::RegionOutOfDomain(format!(
                "point {:?} lies outside the box along axis {a}",
                &x[..g.dim()]
            )));
        }
    }
    Ok(())
}

/// Cell index and weight of the upper node for interpolation along `axis`.
#[inline]
fn locate(g: &Grid, axis: usize, x: f64) -> (usize, usize, f64) {
    let n = g.points()[axis];
    let s = (x - g.lower()[axis]) / g.h();
    match g.boundary() {
        Boundary::ZeroFlux => {
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            (i, i + 1, (s - i as f64).clamp(0.0, 1.0))
        }
        Boundary::Periodic => {
            let s = s.rem_euclid(n as f64);
            let i = (s.floor() as usize).min(n - 1);
            (i, (i + 1) % n, s - i as f64)
        }
    }
}

/// Multilinear interpolation of nodal values at `x` (assumed inside the box).
pub(crate) fn interpolate(g: &Grid, values: &[f64], x: &[f64; 3]) -> f64 {
    let dim = g.dim();
    let mut loc = [(0usize, 0usize, 0.0f64); 3];
    for a in 0..dim {
        loc[a] = locate(g, a, x[a]);
    }
    let mut out = 0.0;
    for corner in 0..(1usize << dim) {
        let mut m = [0usize; 3];
        let mut w = 1.0;
        for a in 0..dim {
            let (i, j, t) = loc[a];
            if corner >> a & 1 == 1 {
                m[a] = j;
                w *= t;
            } else {
                m[a] = i;
                w *= 1.0 - t;
            }
        }
        if w != 0.0 {
            out += w * values[g.index(m)];
        }
    }
    out
}

/// Values at `samples` equispaced points of the segment `base + s·direction`,
/// `s ∈ [0, 1]`, by multilinear interpolation.
pub fn line_sample(
    field: &ScalarField,
    base: [f64; 3],
    direction: [f64; 3],
    samples: usize,
) -> Result<Vec<LineSample>> {
    line_sample_raw(field.grid(), field.values(), base, direction, samples)
}

pub(crate) fn line_sample_raw(
    g: &Grid,
    values: &[f64],
    base: [f64; 3],
    direction: [f64; 3],
    samples: usize,
) -> Result<Vec<LineSample>> {
    if samples < 2 {
        return Err(Error::arg("a line needs at least 2 samples"));
    }
    let mut end = base;
    for a in 0..3 {
        end[a] += direction[a];
    }
    check_point_inside(g, &base)?;
    check_point_inside(g, &end)?;
    let len = norm(&direction);
    Ok((0..samples)
        .map(|k| {
            let s = k as f64 / (samples - 1) as f64;
            let mut p = base;
            for a in 0..3 {
                p[a] += s * direction[a];
            }
            LineSample { t: s * len, value: interpolate(g, values, &p) }
        })
        .collect())
}

/// Values on the hyperplane `x_last = t3`, interpolated linearly between the
/// two adjacent grid planes. Returned in hyperplane-grid order.
pub(crate) fn plane_values(g: &Grid, values: &[f64], t3: f64) -> Result<Vec<f64>> {
    let last = g.dim() - 1;
    let up = g.upper()[last];
    let tol = 1e-9 * g.h();
    if t3 < g.lower()[last] - tol || t3 > up + tol {
        return Err(Error::RegionOutOfDomain(format!(
            "plane x_{last} = {t3} lies outside [{}, {up}]",
            g.lower()[last]
        )));
    }
    let (i, j, t) = locate(g, last, t3);
    let stride: usize = g.points()[..last].iter().product();
    Ok((0..stride)
        .map(|k| (1.0 - t) * values[i * stride + k] + t * values[j * stride + k])
        .collect())
}

/// `∫_{B_r(center) ∩ {x_last = t3}} field dH^{dim−1}` for every radius:
/// `out[field][radius]`. Radii must be ascending; the largest ball must lie
/// inside the domain with the usual margin.
pub fn plane_disk_profiles(
    fields: &[&ScalarField],
    t3: f64,
    center: &[f64; 3],
    radii: &[f64],
    supersample: usize,
) -> Result<Vec<Vec<f64>>> {
    check_supersample(supersample)?;
    check_ascending(radii)?;
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let g = first.grid();
    for f in fields {
        g.check_same(f.grid())?;
    }
    check_ball_inside(g, center, *radii.last().unwrap())?;
    let last = g.dim() - 1;
    let offset = t3 - center[last];
    let planes = fields
        .iter()
        .map(|f| plane_values(g, f.values(), t3))
        .collect::<Result<Vec<_>>>()?;
    let Some(hg) = g.hyperplane() else {
        // One ambient dimension: the slice is a point, counted with unit mass.
        return Ok(planes
            .iter()
            .map(|p| radii.iter().map(|&r| if offset.abs() <= r { p[0] } else { 0.0 }).collect())
            .collect());
    };
    let disk: Vec<f64> = radii.iter().map(|&r| (r * r - offset * offset).max(0.0).sqrt()).collect();
    // Disk radii are nondecreasing; collapse ties so the profile routine sees
    // a strictly ascending list, then expand back.
    let mut unique: Vec<f64> = Vec::new();
    let mut which = Vec::with_capacity(disk.len());
    for &d in &disk {
        if unique.last().is_none_or(|&l| d > l) {
            unique.push(d);
        }
        which.push(unique.len() - 1);
    }
    let mut c = [0.0; 3];
    c[..last].copy_from_slice(&center[..last]);
    let raw: Vec<&[f64]> = planes.iter().map(|p| p.as_slice()).collect();
    let prof = ball_profiles_raw(&hg, &raw, &c, &unique, None, supersample);
    Ok(prof
        .into_iter()
        .map(|p| {
            which
                .iter()
                .zip(&disk)
                .map(|(&k, &d)| if d > 0.0 { p[k] } else { 0.0 })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;
    use std::f64::consts::PI;

    fn square(points: usize) -> Grid {
        Grid::cube(2, -1.0, 1.0, points, Boundary::ZeroFlux).unwrap()
    }

    #[test]
    fn box_fraction_matches_sampling() {
        let h = 1.0;
        // Square cut by a diagonal line through its centre: half.
        let w = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let half = 0.5 * (w[0] + w[1]);
        assert!((box_halfspace_fraction(&w, half, h) - 0.5).abs() < 1e-14);
        // Against brute-force sampling of the unit square and cube.
        for (n, t) in [([0.6, 0.8, 0.0], 0.3), ([0.48, 0.6, 0.64], 0.9), ([1.0, 0.0, 0.0], 0.25)] {
            let dim = if n[2] == 0.0 { 2 } else { 3 };
            let widths: Vec<f64> = n[..dim].iter().map(|c: &f64| c.abs() * h).collect();
            let m: usize = 60;
            let mut inside = 0usize;
            let total = m.pow(dim as u32);
            for k in 0..total {
                let mut rem = k;
                let mut y = 0.0;
                for c in n.iter().take(dim) {
                    y += c.abs() * ((rem % m) as f64 + 0.5) / m as f64;
                    rem /= m;
                }
                inside += (y <= t) as usize;
            }
            let sampled = inside as f64 / total as f64;
            assert!((box_halfspace_fraction(&widths, t, h) - sampled).abs() < 2e-2, "{n:?}");
        }
        assert_eq!(box_halfspace_fraction(&[0.5, 0.5], -0.1, 1.0), 0.0);
        assert_eq!(box_halfspace_fraction(&[0.5, 0.5], 1.1, 1.0), 1.0);
    }

    #[test]
    fn whole_domain_volume_is_exact() {
        for dim in 1..=3 {
            let g = Grid::cube(dim, -1.0, 1.0, 17, Boundary::ZeroFlux).unwrap();
            let v = integrate(&ScalarField::constant(g, 1.0), &Region::Whole, 1).unwrap();
            assert!((v - 2f64.powi(dim as i32)).abs() < 1e-12);
        }
        let g = Grid::cube(2, 0.0, 1.0, 16, Boundary::Periodic).unwrap();
        let v = integrate(&ScalarField::constant(g, 1.0), &Region::Whole, 1).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_area_within_half_percent() {
        // h = r/32 with r = 0.5 on [-1, 1]^2.
        let g = square(129);
        let r = 32.0 * g.h();
        let one = ScalarField::constant(g, 1.0);
        let v = integrate(&one, &Region::Ball { center: [0.0; 3], radius: r }, 4).unwrap();
        assert!((v / (PI * r * r) - 1.0).abs() < 5e-3, "{v}");
    }

    #[test]
    fn ball_exceeding_margin_is_rejected() {
        let g = square(65);
        let one = ScalarField::constant(g, 1.0);
        let err = integrate(&one, &Region::Ball { center: [0.5, 0.0, 0.0], radius: 0.49 }, 4);
        assert!(matches!(err, Err(Error::RegionOutOfDomain(_))));
    }

    #[test]
    fn second_moment_of_disk() {
        // ∫_{B_r} |x|² = π r⁴ / 2 in the plane.
        let g = square(257);
        let r = 0.6;
        let f = ScalarField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]);
        let v = integrate(&f, &Region::Ball { center: [0.0; 3], radius: r }, 4).unwrap();
        assert!((v / (PI * r.powi(4) / 2.0) - 1.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn ball_volume_three_dimensions() {
        let g = Grid::cube(3, -1.0, 1.0, 65, Boundary::ZeroFlux).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let r = 0.7;
        let v = integrate(&one, &Region::Ball { center: [0.05, -0.02, 0.0], radius: r }, 4).unwrap();
        assert!((v / (4.0 / 3.0 * PI * r.powi(3)) - 1.0).abs() < 5e-3, "{v}");
    }

    #[test]
    fn supersampling_converges_at_fixed_h() {
        let g = square(65);
        let one = ScalarField::constant(g, 1.0);
        let r = 0.537;
        let err = |ss| {
            let v = integrate(&one, &Region::Ball { center: [0.01, 0.02, 0.0], radius: r }, ss).unwrap();
            (v / (PI * r * r) - 1.0).abs()
        };
        let (e1, e8) = (err(1), err(8));
        assert!(e8 < 2e-3 && e8 <= e1 + 1e-12, "{e1} {e8}");
    }

    #[test]
    fn cumulative_profile_matches_areas() {
        let g = square(257);
        let one = ScalarField::constant(g, 1.0);
        let p = cumulative_ball_profile(&one, [0.0; 3], &[0.1, 0.2], 4).unwrap();
        assert!((p[0].1 / (PI * 0.01) - 1.0).abs() < 1e-2);
        assert!((p[1].1 / (PI * 0.04) - 1.0).abs() < 1e-2);
        let zero = ScalarField::constant(g, 0.0);
        let p = cumulative_ball_profile(&zero, [0.0; 3], &[0.1, 0.2], 4).unwrap();
        assert!(p.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn boundary_profile_matches_circumference() {
        let g = square(257);
        let h = g.h();
        let one = ScalarField::constant(g, 1.0);
        let radii: Vec<f64> = (0..20).map(|k| 8.0 * h + 0.03 * k as f64).collect();
        let cum = cumulative_ball_profile(&one, [0.0; 3], &radii, 4).unwrap();
        for (r, d) in boundary_profile(&cum).unwrap() {
            assert!((d / (2.0 * PI * r) - 1.0).abs() < 2e-2, "r = {r}: {d}");
        }
        assert!(boundary_profile(&cum[..2]).is_err());
        let zero = cumulative_ball_profile(&ScalarField::constant(g, 0.0), [0.0; 3], &radii, 4).unwrap();
        assert!(boundary_profile(&zero).unwrap().iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn slab_containing_ball_equals_ball() {
        let g = square(129);
        let f = ScalarField::from_fn(g, |x| 1.0 + x[0] * x[1]);
        let c = [0.1, 0.0, 0.0];
        let a = integrate(&f, &Region::Ball { center: c, radius: 0.4 }, 4).unwrap();
        let b = integrate(&f, &Region::SlabBall { center: c, radius: 0.4, t1: -0.5, t2: 0.6 }, 4).unwrap();
        assert!((a - b).abs() < 1e-14);
        // Half disk.
        let half = integrate(&ScalarField::constant(g, 1.0), &Region::SlabBall {
            center: [0.0; 3],
            radius: 0.5,
            t1: 0.0,
            t2: 0.9,
        }, 4)
        .unwrap();
        assert!((half / (PI * 0.125) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn plane_slice_chord_length() {
        let g = square(201);
        let one = ScalarField::constant(g, 1.0);
        let ball = Ball { center: [0.0, 0.1, 0.0], radius: 0.5 };
        let v = integrate(&one, &Region::PlaneSlice { t3: 0.4, within: Some(ball) }, 8).unwrap();
        let expected = 2.0 * (0.25f64 - 0.09).sqrt();
        assert!((v - expected).abs() < 0.02, "{v}");
        let full = integrate(&one, &Region::PlaneSlice { t3: 0.013, within: None }, 1).unwrap();
        assert!((full - 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_samples_reproduce_linear_fields() {
        let g = square(33);
        let f = ScalarField::from_fn(g, |x| 2.0 * x[0] - x[1] + 0.5);
        let s = line_sample(&f, [-0.9, -0.3, 0.0], [1.7, 0.4, 0.0], 11).unwrap();
        for p in &s {
            let frac = p.t / (1.7f64.hypot(0.4));
            let x = -0.9 + 1.7 * frac;
            let y = -0.3 + 0.4 * frac;
            assert!((p.value - (2.0 * x - y + 0.5)).abs() < 1e-12);
        }
        let c = line_sample(&ScalarField::constant(g, 3.0), [0.0; 3], [0.5, 0.5, 0.0], 5).unwrap();
        assert!(c.iter().all(|p| (p.value - 3.0).abs() < 1e-15));
        assert!(line_sample(&f, [0.0; 3], [1.5, 0.0, 0.0], 5).is_err());
    }

    #[test]
    fn line_sample_of_tanh_layer() {
        let eps = 0.05;
        let g = Grid::with_max_spacing(&[-1.0, -1.0], &[1.0, 1.0], eps / 8.0, Boundary::ZeroFlux).unwrap();
        let u = ScalarField::from_fn(g, |x| (x[0] / eps).tanh());
        let s = line_sample(&u, [-0.5, 0.013, 0.0], [1.0, 0.0, 0.0], 401).unwrap();
        for p in s {
            let x = -0.5 + p.t;
            // Linear interpolation error is at most h²·max|u″|/8 ≈ 1.5e-3.
            assert!((p.value - (x / eps).tanh()).abs() < 1.6e-3);
        }
    }

    #[test]
    fn line_integral() {
        let g = square(65);
        let f = ScalarField::from_fn(g, |x| x[0]);
        let v = integrate(&f, &Region::Line { base: [0.0; 3], direction: [1.0, 0.0, 0.0] }, 1).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }
}
