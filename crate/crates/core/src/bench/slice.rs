use std::fmt::Write as _;

use crate::collide::{NeuralCollider, PoseRef};
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// An axis-aligned square-sampled plane: `axis` fixed at `offset`, the other
/// two axes (in increasing order) spanning `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePlane {
    pub axis: usize,
    pub offset: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl SlicePlane {
    fn in_plane_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    /// Grid point `(i, j)`: column `i` along the first in-plane axis, row `j`
    /// along the second.
    pub fn point(&self, resolution: usize, i: usize, j: usize) -> Vec3 {
        let [a, b] = self.in_plane_axes();
        let f = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (resolution - 1) as f64;
        let mut p = Vec3::zeros();
        p[self.axis] = self.offset;
        p[a] = f(i, self.lo[0], self.hi[0]);
        p[b] = f(j, self.lo[1], self.hi[1]);
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceGrid {
    pub plane: SlicePlane,
    pub resolution: usize,
    /// Row-major world-unit distances.
    pub values: Vec<f64>,
    /// Grid points outside the normalized training cube `[-1, 1]^3`.
    pub extrapolated: usize,
}

/// Evaluates the collider on an `R × R` grid over `plane`.
pub fn levelset_slice(collider: &NeuralCollider, pose: PoseRef<'_>, plane: SlicePlane, resolution: usize) -> Result<SliceGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("slice resolution must be at least 2, got {resolution}")));
    }
    if plane.axis > 2 {
        return Err(Error::InvalidArgument(format!("slice axis {} is not 0, 1 or 2", plane.axis)));
    }
    let points: Vec<Vec3> = (0..resolution)
        .flat_map(|j| (0..resolution).map(move |i| plane.point(resolution, i, j)))
        .collect();
    let extrapolated = collider
        .normalized_points(pose, &points)?
        .iter()
        .filter(|q| q.amax() > 1.0)
        .count();
    if extrapolated > 0 {
        log::info!("{extrapolated} slice points lie outside the training box");
    }
    Ok(SliceGrid {
        plane,
        resolution,
        values: collider.distances(pose, &points)?,
        extrapolated,
    })
}

impl SliceGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,x,y,z,d\n");
        for j in 0..self.resolution {
            for i in 0..self.resolution {
                let p = self.plane.point(self.resolution, i, j);
                let _ = writeln!(s, "{i},{j},{},{},{},{}", p.x, p.y, p.z, self.value(i, j));
            }
        }
        s
    }

    /// Binary PGM, one byte per cell: `round(127.5·(1 + clamp(d/scale, −1, 1)))`,
    /// so 0 is deep inside, 255 far outside and the surface sits near 128.
    /// Row `j = R−1` is written first so the second axis points up.
    pub fn to_pgm(&self, scale: f64) -> Result<Vec<u8>> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument("PGM scale must be positive".into()));
        }
        let r = self.resolution;
        let mut out = format!("P5\n{r} {r}\n255\n").into_bytes();
        for j in (0..r).rev() {
            for i in 0..r {
                out.push(pgm_byte(self.value(i, j), scale));
            }
        }
        Ok(out)
    }
}

pub fn pgm_byte(d: f64, scale: f64) -> u8 {
    (127.5 * (1.0 + (d / scale).clamp(-1.0, 1.0))).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_mapping_endpoints() {
        assert_eq!(pgm_byte(-5.0, 1.0), 0);
        assert_eq!(pgm_byte(5.0, 1.0), 255);
        assert_eq!(pgm_byte(0.0, 1.0), 128);
        assert_eq!(pgm_byte(-0.5, 1.0), 64);
    }

    #[test]
    fn plane_corners() {
        let p = SlicePlane {
            axis: 1,
            offset: 0.25,
            lo: [-1.0, -2.0],
            hi: [1.0, 2.0],
        };
        assert_eq!(p.point(3, 0, 0), Vec3::new(-1.0, 0.25, -2.0));
        assert_eq!(p.point(3, 2, 1), Vec3::new(1.0, 0.25, 0.0));
    }
}
