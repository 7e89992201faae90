//! Line-oriented model documents.
//!
//! ```text
//! # comment
//! base inertia=<21 floats>
//! body <id> parent=<id> joint=<revolute|prismatic|helical> axis=<x|y|z> [pitch=<float>] xform=<12 floats> inertia=<21 floats>
//! ```
//!
//! Float lists are comma separated. `xform` holds the rotation row-major
//! followed by the origin of `^{λ(i)|i}H_{λ(i)}`. `inertia` holds the upper
//! triangle of the 6×6 spatial inertia, row-major.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use super::{JointKind, JointType, Link, MultibodyModel, DEFAULT_PITCH};
use crate::error::{Error, Result};
use crate::spatial::{symmetric_from_upper, upper_triangle, Pose, SpatialInertia};

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_floats<const N: usize>(line: usize, field: &str, text: &str) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != N {
        return Err(parse_err(
            line,
            field,
            format!("expected {N} comma-separated floats, got {}", parts.len()),
        ));
    }
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| parse_err(line, field, format!("`{part}`: {e}")))?;
        if !slot.is_finite() {
            return Err(parse_err(line, field, format!("`{part}` is not finite")));
        }
    }
    Ok(out)
}

fn parse_index(line: usize, field: &str, text: &str) -> Result<usize> {
    text.parse::<usize>()
        .map_err(|e| parse_err(line, field, format!("`{text}`: {e}")))
}

fn key_values(line: usize, tokens: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(line, tok, "expected key=value"))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(parse_err(line, k, "duplicate field"));
        }
    }
    Ok(map)
}

fn take<'a>(map: &'a BTreeMap<String, String>, line: usize, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| parse_err(line, key, "missing field"))
}

fn parse_inertia(line: usize, text: &str) -> Result<SpatialInertia> {
    Ok(symmetric_from_upper(&parse_floats::<21>(
        line, "inertia", text,
    )?))
}

fn parse_axis(line: usize, text: &str) -> Result<Vector3<f64>> {
    match text {
        "x" => Ok(Vector3::x()),
        "y" => Ok(Vector3::y()),
        "z" => Ok(Vector3::z()),
        _ => Err(parse_err(
            line,
            "axis",
            format!("`{text}` is not one of x, y, z"),
        )),
    }
}

struct BodyLine {
    line: usize,
    link: Link,
    inertia: SpatialInertia,
}

fn parse_body(line: usize, tokens: &[&str]) -> Result<(usize, BodyLine)> {
    let id_text = tokens
        .get(1)
        .ok_or_else(|| parse_err(line, "id", "missing body id"))?;
    let id = parse_index(line, "id", id_text)?;
    if id == 0 {
        return Err(parse_err(
            line,
            "id",
            "body 0 is the base, use a `base` line",
        ));
    }
    let map = key_values(line, &tokens[2..])?;
    for key in map.keys() {
        if !matches!(
            key.as_str(),
            "parent" | "joint" | "axis" | "pitch" | "xform" | "inertia"
        ) {
            return Err(parse_err(line, key, "unknown field"));
        }
    }
    let parent = parse_index(line, "parent", take(&map, line, "parent")?)?;
    let kind_text = take(&map, line, "joint")?;
    let kind = JointKind::parse(kind_text).ok_or_else(|| {
        parse_err(
            line,
            "joint",
            format!("`{kind_text}` is not revolute, prismatic or helical"),
        )
    })?;
    let axis = parse_axis(line, take(&map, line, "axis")?)?;
    let pitch = match map.get("pitch") {
        Some(p) => parse_floats::<1>(line, "pitch", p)?[0],
        None => DEFAULT_PITCH,
    };
    let xf = parse_floats::<12>(line, "xform", take(&map, line, "xform")?)?;
    let rotation = Matrix3::from_row_slice(&xf[..9]);
    let origin = Vector3::new(xf[9], xf[10], xf[11]);
    let inertia = parse_inertia(line, take(&map, line, "inertia")?)?;
    Ok((
        id,
        BodyLine {
            line,
            link: Link {
                parent,
                joint: JointType { kind, axis, pitch },
                fixed_transform: Pose::new(rotation, origin),
            },
            inertia,
        },
    ))
}

/// Parses and validates a model document.
pub fn load_model(text: &str) -> Result<MultibodyModel> {
    let mut base: Option<SpatialInertia> = None;
    let mut bodies: BTreeMap<usize, BodyLine> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "base" => {
                if base.is_some() {
                    return Err(parse_err(line, "base", "duplicate base line"));
                }
                let map = key_values(line, &tokens[1..])?;
                if let Some(key) = map.keys().find(|k| k.as_str() != "inertia") {
                    return Err(parse_err(line, key, "unknown field"));
                }
                base = Some(parse_inertia(line, take(&map, line, "inertia")?)?);
            }
            "body" => {
                let (id, body) = parse_body(line, &tokens)?;
                if let Some(prev) = bodies.get(&id) {
                    return Err(parse_err(
                        line,
                        "id",
                        format!("body {id} already defined on line {}", prev.line),
                    ));
                }
                bodies.insert(id, body);
            }
            other => {
                return Err(parse_err(
                    line,
                    "record",
                    format!("unknown record `{other}`, expected `base` or `body`"),
                ))
            }
        }
    }
    let base = base.ok_or_else(|| parse_err(0, "base", "missing base line"))?;
    let n = bodies.len();
    if let Some((&id, body)) = bodies.iter().find(|(&id, _)| id > n) {
        return Err(parse_err(
            body.line,
            "id",
            format!("body ids must be 1..={n} without gaps, found {id}"),
        ));
    }
    let mut links = Vec::with_capacity(n);
    let mut inertias = Vec::with_capacity(n + 1);
    inertias.push(base);
    for (_, body) in bodies {
        links.push(body.link);
        inertias.push(body.inertia);
    }
    MultibodyModel::new(links, inertias)
}

fn axis_name(axis: &Vector3<f64>) -> Option<&'static str> {
    if *axis == Vector3::x() {
        Some("x")
    } else if *axis == Vector3::y() {
        Some("y")
    } else if *axis == Vector3::z() {
        Some("z")
    } else {
        None
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Serializes a model so that [`load_model`] reproduces it exactly.
///
/// Fails for joint axes other than the coordinate axes.
pub fn to_document(model: &MultibodyModel) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "base inertia={}",
        join(&upper_triangle(model.inertia(0)))
    );
    for i in 1..=model.n_bodies() {
        let link = model.link(i);
        let axis = axis_name(&link.joint.axis).ok_or_else(|| {
            Error::Config(format!(
                "body {i}: axis {:?} cannot be written, only x, y and z are supported",
                link.joint.axis.as_slice()
            ))
        })?;
        let r = link.fixed_transform.rotation;
        let o = link.fixed_transform.origin;
        let mut xf = [0.0; 12];
        for row in 0..3 {
            for col in 0..3 {
                xf[3 * row + col] = r[(row, col)];
            }
        }
        xf[9..].copy_from_slice(o.as_slice());
        let pitch = match link.joint.kind {
            JointKind::Helical => format!(" pitch={:e}", link.joint.pitch),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "body {i} parent={} joint={} axis={axis}{pitch} xform={} inertia={}",
            link.parent,
            link.joint.kind.name(),
            join(&xf),
            join(&upper_triangle(model.inertia(i))),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_test_system, random_model};

    const IDENTITY_INERTIA: &str = "1,0,0,0,0,0,1,0,0,0,0,1,0,0,0,1,0,0,1,0,1";
    const IDENTITY_XFORM: &str = "1,0,0,0,1,0,0,0,1,0,0,0";

    #[test]
    fn base_only_document() {
        let m = load_model(&format!("# single body\nbase inertia={IDENTITY_INERTIA}\n")).unwrap();
        assert_eq!(m.n_bodies(), 0);
        assert_eq!(*m.inertia(0), nalgebra::Matrix6::identity());
    }

    #[test]
    fn test_system_roundtrip() {
        let m = build_test_system();
        let doc = to_document(&m).unwrap();
        let back = load_model(&doc).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.n_bodies(), 9);
        assert!(back.children(0).len() >= 2);
    }

    #[test]
    fn random_model_roundtrip() {
        for seed in 0..5 {
            let m = random_model(seed, 7);
            assert_eq!(load_model(&to_document(&m).unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn forward_parent_is_topology_error() {
        let mut doc = format!("base inertia={IDENTITY_INERTIA}\n");
        for (id, parent) in [(1, 0), (2, 1), (3, 5), (4, 3), (5, 4)] {
            doc += &format!(
                "body {id} parent={parent} joint=revolute axis=z xform={IDENTITY_XFORM} inertia={IDENTITY_INERTIA}\n"
            );
        }
        assert_eq!(
            load_model(&doc).unwrap_err(),
            Error::Topology { body: 3, parent: 5 }
        );
    }

    #[test]
    fn parse_errors_carry_location() {
        let doc = format!(
            "base inertia={IDENTITY_INERTIA}\nbody 1 parent=0 joint=revolute axis=q xform={IDENTITY_XFORM} inertia={IDENTITY_INERTIA}\n"
        );
        match load_model(&doc).unwrap_err() {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "axis");
            }
            e => panic!("unexpected {e:?}"),
        }
        let doc = "base inertia=1,2,3\n".to_string();
        assert!(matches!(
            load_model(&doc),
            Err(Error::Parse { line: 1, .. })
        ));
        let doc = format!(
            "base inertia={IDENTITY_INERTIA}\nbody 1 parent=0 joint=hinge axis=x xform={IDENTITY_XFORM} inertia={IDENTITY_INERTIA}\n"
        );
        assert!(matches!(
            load_model(&doc),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(load_model(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn scientific_notation_and_pitch() {
        let doc = format!(
            "base inertia={IDENTITY_INERTIA}\nbody 1 parent=0 joint=helical axis=y pitch=2.5e-2 xform=1e0,0,0,0,1,0,0,0,1,1.5E-1,0,0 inertia={IDENTITY_INERTIA}\n"
        );
        let m = load_model(&doc).unwrap();
        assert_eq!(m.joint(1).pitch, 0.025);
        assert_eq!(m.link(1).fixed_transform.origin.x, 0.15);
    }

    #[test]
    fn non_spd_inertia_is_reported() {
        let doc = "base inertia=1,0,0,0,0,0,1,0,0,0,0,1,0,0,0,1,0,0,1,0,-1\n";
        assert!(matches!(
            load_model(doc),
            Err(Error::NonSpdInertia { body: 0, .. })
        ));
    }

    #[test]
    fn gap_in_ids_is_rejected() {
        let doc = format!(
            "base inertia={IDENTITY_INERTIA}\nbody 2 parent=0 joint=revolute axis=x xform={IDENTITY_XFORM} inertia={IDENTITY_INERTIA}\n"
        );
        assert!(matches!(
            load_model(&doc),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
