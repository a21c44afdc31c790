use serde::Serialize;

use super::grid::GridField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub position: [f64; 2],
    pub sign: i8,
    pub height: f64,
}

/// Vertex of the parabola through `(−1, a), (0, b), (1, c)`, clamped to ±½.
fn vertex(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

/// Local maxima of `|v|` above `threshold`, refined by per-axis quadratic fits.
/// Ties between neighbours go to the node with the larger index.
pub fn extract_peaks(v: &GridField, threshold: f64) -> Vec<Peak> {
    let g = v.grid;
    let n = g.n;
    let h = g.h();
    let a = |ix: usize, iy: usize| v.at(ix, iy).abs();
    let mut out = Vec::new();
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let c = a(ix, iy);
            if !(c > threshold) {
                continue;
            }
            let k = g.index(ix, iy);
            let mut is_max = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = ((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
                    let o = a(jx, jy);
                    let later = g.index(jx, jy) > k;
                    if o > c || (later && o == c) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let sx = vertex(a(ix - 1, iy), c, a(ix + 1, iy));
            let sy = vertex(a(ix, iy - 1), c, a(ix, iy + 1));
            let val = v.at(ix, iy);
            out.push(Peak {
                position: [g.coord(ix) + sx * h, g.coord(iy) + sy * h],
                sign: if val > 0.0 { 1 } else { -1 },
                height: val,
            });
        }
    }
    out
}
