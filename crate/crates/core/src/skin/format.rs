//! Plain-text skeleton + weights + clips file.
//!
//! ```text
//! ncd-skin 1
//! joints <J>
//! <name> <parent name | -> <axes, e.g. xz | -> <r00 r01 r02 r10 r11 r12 r20 r21 r22> <tx ty tz>
//! ...
//! weights <V>
//! <k> <joint index> <weight> ... (k pairs)
//! ...
//! clips <C>
//! clip <name> <frame count> <frames per second>
//! <one row of joint angles in radians per frame>
//! ...
//! ```
//!
//! Blank lines and `#` comments are ignored. Joints must be listed parents
//! first; the angle row order is joints in file order, axes in listed order.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;

use super::{AnimationClip, Axis, Joint, Skeleton, SkinWeights};
use crate::error::{Error, Result};
use crate::geom::{RigidTransform, Vec3};

pub const SKIN_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SkinAsset {
    pub skeleton: Skeleton,
    pub weights: SkinWeights,
    pub clips: Vec<AnimationClip>,
}

pub fn load_skin_file(path: &Path) -> Result<SkinAsset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_skin(&text, &path.display().to_string())
}

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    name: &'a str,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l.split_whitespace().collect()))
            }
            None => Err(Error::parse(self.name, self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.name, line, msg)
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, toks) = self.next(key)?;
        if toks.first() != Some(&key) {
            return Err(self.err(n, format!("expected `{key}`")));
        }
        Ok((n, toks))
    }
}

fn num<T: std::str::FromStr>(tok: Option<&&str>, line: usize, name: &str, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(name, line, format!("invalid or missing {what}")))
}

pub fn parse_skin(text: &str, name: &str) -> Result<SkinAsset> {
    let mut lines = Lines {
        inner: Box::new(text.lines().enumerate().filter_map(|(i, l)| {
            let c = l.split('#').next().unwrap_or("").trim();
            (!c.is_empty()).then_some((i + 1, c))
        })),
        name,
        last: 0,
    };
    let (n, toks) = lines.keyword("ncd-skin")?;
    let version: u32 = num(toks.get(1), n, name, "version")?;
    if version != SKIN_FORMAT_VERSION {
        return Err(lines.err(n, format!("unsupported version {version}")));
    }

    let (n, toks) = lines.keyword("joints")?;
    let count: usize = num(toks.get(1), n, name, "joint count")?;
    let mut joints: Vec<Joint> = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, t) = lines.next("joint row")?;
        if t.len() != 15 {
            return Err(lines.err(n, format!("joint row needs 15 fields, found {}", t.len())));
        }
        let parent = match t[1] {
            "-" => None,
            p => Some(
                joints
                    .iter()
                    .position(|j| j.name == p)
                    .ok_or_else(|| lines.err(n, format!("parent `{p}` not defined before `{}`", t[0])))?,
            ),
        };
        let axes = match t[2] {
            "-" => vec![],
            a => a
                .chars()
                .map(|c| Axis::from_char(c).ok_or_else(|| lines.err(n, format!("bad axis `{c}`"))))
                .collect::<Result<_>>()?,
        };
        let mut v = [0.0; 12];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = num(t.get(3 + k), n, name, "transform value")?;
        }
        let rot = Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
        let rest = RigidTransform::new(rot, Vec3::new(v[9], v[10], v[11])).map_err(|e| lines.err(n, e.to_string()))?;
        joints.push(Joint {
            name: t[0].to_string(),
            parent,
            rest,
            axes,
        });
    }
    let skeleton = Skeleton::new(joints)?;

    let (n, toks) = lines.keyword("weights")?;
    let count: usize = num(toks.get(1), n, name, "vertex count")?;
    let mut influences = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, t) = lines.next("weight row")?;
        let k: usize = num(t.first(), n, name, "influence count")?;
        if t.len() != 1 + 2 * k {
            return Err(lines.err(n, format!("expected {k} (joint, weight) pairs")));
        }
        let mut inf = Vec::with_capacity(k);
        for p in 0..k {
            inf.push((
                num(t.get(1 + 2 * p), n, name, "joint index")?,
                num(t.get(2 + 2 * p), n, name, "weight")?,
            ));
        }
        influences.push(inf);
    }
    let weights = SkinWeights::new(influences, skeleton.joints().len())?;

    let (n, toks) = lines.keyword("clips")?;
    let count: usize = num(toks.get(1), n, name, "clip count")?;
    let mut clips = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, t) = lines.keyword("clip")?;
        let clip_name = t.get(1).ok_or_else(|| lines.err(n, "missing clip name"))?.to_string();
        let frames: usize = num(t.get(2), n, name, "frame count")?;
        let fps: f64 = num(t.get(3), n, name, "frame rate")?;
        let mut rows = Vec::with_capacity(frames);
        for _ in 0..frames {
            let (n, t) = lines.next("frame row")?;
            if t.len() != skeleton.dof_count() {
                return Err(lines.err(n, format!("frame has {} angles, skeleton has {} DOFs", t.len(), skeleton.dof_count())));
            }
            rows.push(t.iter().map(|v| v.parse::<f64>().map_err(|_| lines.err(n, format!("bad angle `{v}`")))).collect::<Result<Vec<_>>>()?);
        }
        clips.push(AnimationClip::new(clip_name, fps, rows)?);
    }
    Ok(SkinAsset {
        skeleton,
        weights,
        clips,
    })
}

pub fn write_skin(asset: &SkinAsset, path: &Path) -> Result<()> {
    let mut s = format!("ncd-skin {SKIN_FORMAT_VERSION}\njoints {}\n", asset.skeleton.joints().len());
    for j in asset.skeleton.joints() {
        let parent = j.parent.map_or("-".to_string(), |p| asset.skeleton.joints()[p].name.clone());
        let axes: String = if j.axes.is_empty() {
            "-".into()
        } else {
            j.axes.iter().map(|a| a.as_char()).collect()
        };
        let r = &j.rest.rotation;
        let t = &j.rest.translation;
        let _ = write!(s, "{} {} {}", j.name, parent, axes);
        for i in 0..3 {
            for k in 0..3 {
                let _ = write!(s, " {}", r[(i, k)]);
            }
        }
        let _ = writeln!(s, " {} {} {}", t.x, t.y, t.z);
    }
    let _ = writeln!(s, "weights {}", asset.weights.len());
    for inf in asset.weights.influences() {
        let _ = write!(s, "{}", inf.len());
        for (j, w) in inf {
            let _ = write!(s, " {j} {w}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "clips {}", asset.clips.len());
    for c in &asset.clips {
        let _ = writeln!(s, "clip {} {} {}", c.name, c.frames().len(), c.frame_rate);
        for f in c.frames() {
            let row: Vec<String> = f.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    #[test]
    fn character_round_trips_through_text() {
        let c = assets::capsule_character(0.05).unwrap();
        let asset = SkinAsset {
            skeleton: c.skeleton.clone(),
            weights: c.weights.clone(),
            clips: assets::synthetic_clips(&c.skeleton),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.skin");
        write_skin(&asset, &p).unwrap();
        assert_eq!(load_skin_file(&p).unwrap(), asset);
    }

    #[test]
    fn malformed_rows_report_lines() {
        let text = "ncd-skin 1\njoints 1\nroot - - 1 0 0 0 1 0 0 0 1 0 0\n";
        match parse_skin(text, "s") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_skin("ncd-skin 7\n", "s").is_err());
        let ok_head = "ncd-skin 1\njoints 1\nroot - x 1 0 0 0 1 0 0 0 1 0 0 0\nweights 1\n1 0 1\nclips 1\nclip a 1 30\n0.1 0.2\n";
        assert!(matches!(parse_skin(ok_head, "s"), Err(Error::Parse { line: 8, .. })));
        let good = ok_head.replace("0.1 0.2", "0.1");
        let a = parse_skin(&good, "s").unwrap();
        assert_eq!(a.clips[0].frames(), &[vec![0.1]]);
    }
}
