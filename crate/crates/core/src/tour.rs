//! Street-view style navigation graph over localized panoramas.
//!
//! Every panorama links to its nearest neighbours. Each link is placed in
//! the source panorama by yaw/pitch in that camera's frame and styled by
//! relative distance: the nearest link of a node is red and large, the
//! farthest blue and small.

use std::cmp::Ordering;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sfm::{axis_angle_to_matrix, Reconstruction};

/// Tilt of a panorama's up axis from world `+z` above which a warning is
/// logged.
pub const TILT_WARNING_DEG: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PanoNode {
    pub id: String,
    pub image: String,
    pub position: Vector3<f64>,
    /// World→camera axis-angle.
    pub rotation: Vector3<f64>,
    pub missing_image: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    #[serde(rename = "from")]
    pub from_id: String,
    #[serde(rename = "to")]
    pub to_id: String,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub distance: f64,
    pub color: [u8; 3],
    pub size_px: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Meters,
    Reconstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TourOptions {
    pub max_neighbors: usize,
    /// `None` means unlimited.
    pub max_distance: Option<f64>,
    /// Metres per reconstruction unit, when known.
    pub scale: Option<f64>,
    pub min_size: u32,
    pub max_size: u32,
}

impl Default for TourOptions {
    fn default() -> Self {
        Self {
            max_neighbors: 4,
            max_distance: None,
            scale: None,
            min_size: 10,
            max_size: 30,
        }
    }
}

impl TourOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_neighbors < 1 {
            return Err(Error::Config("max_neighbors must be >= 1".into()));
        }
        if self.max_distance.is_some_and(|d| !d.is_finite() || d <= 0.0) {
            return Err(Error::Config("max_distance must be > 0".into()));
        }
        if self.scale.is_some_and(|s| !s.is_finite() || s <= 0.0) {
            return Err(Error::Config("scale must be > 0".into()));
        }
        if self.min_size > self.max_size {
            return Err(Error::Config("min_size must not exceed max_size".into()));
        }
        Ok(())
    }

    pub fn units(&self) -> Units {
        if self.scale.is_some() {
            Units::Meters
        } else {
            Units::Reconstruction
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TourGraph {
    pub nodes: Vec<PanoNode>,
    pub edges: Vec<Hotspot>,
    pub options: TourOptions,
}

/// Normalize an angle in degrees into `(-180, 180]`.
pub fn normalize_degrees(mut yaw: f64) -> f64 {
    yaw %= 360.0;
    if yaw <= -180.0 {
        yaw += 360.0;
    } else if yaw > 180.0 {
        yaw -= 360.0;
    }
    // Avoid emitting `-0.0`.
    if yaw == 0.0 {
        0.0
    } else {
        yaw
    }
}

/// Direction of `to` as seen from `from`'s panorama, in degrees.
///
/// Camera axes are x-right, y-down, z-forward: yaw is measured from the
/// forward axis towards the right, pitch is positive upwards. Straight up or
/// down has yaw 0.
pub fn bearing(from: &PanoNode, to: &PanoNode) -> Result<(f64, f64)> {
    let d_world = to.position - from.position;
    let norm = d_world.norm();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::DegenerateEdge {
            from: from.id.clone(),
            to: to.id.clone(),
        });
    }
    let d = axis_angle_to_matrix(&from.rotation)? * d_world;
    let horizontal = d.x.hypot(d.z);
    let yaw = if horizontal < 1e-9 * norm {
        0.0
    } else {
        normalize_degrees(d.x.atan2(d.z).to_degrees())
    };
    let pitch = -(d.y / d.norm()).clamp(-1.0, 1.0).asin().to_degrees();
    Ok((yaw, if pitch == 0.0 { 0.0 } else { pitch }))
}

/// Colour and marker size for a link at `distance` among a node's links
/// spanning `[d_min, d_max]`.
pub fn style(distance: f64, d_min: f64, d_max: f64, min_size: u32, max_size: u32) -> Result<([u8; 3], u32)> {
    if !(d_min <= distance && distance <= d_max) {
        return Err(Error::RangeError {
            distance,
            min: d_min,
            max: d_max,
        });
    }
    let u = if d_max > d_min {
        (distance - d_min) / (d_max - d_min)
    } else {
        0.0
    };
    let color = [(255.0 * (1.0 - u)).round() as u8, 0, (255.0 * u).round() as u8];
    let size = (max_size as f64 - u * (max_size - min_size) as f64).round() as u32;
    Ok((color, size))
}

/// Angle between the panorama's up axis and world `+z`, in degrees.
pub fn up_tilt_deg(node: &PanoNode) -> Result<f64> {
    let r = axis_angle_to_matrix(&node.rotation)?;
    let up_world = r.transpose() * Vector3::new(0.0, -1.0, 0.0);
    Ok(up_world.z.clamp(-1.0, 1.0).acos().to_degrees())
}

/// k-nearest-neighbour navigation graph. Nodes are ordered by shot id and
/// ties in distance break by ascending id. Coincident panoramas are not
/// linked.
pub fn build_graph(rec: &Reconstruction, options: &TourOptions) -> Result<TourGraph> {
    options.validate()?;
    if rec.shots.is_empty() {
        return Err(Error::EmptyModel);
    }
    let scale = options.scale.unwrap_or(1.0);
    let nodes: Vec<PanoNode> = rec
        .shots
        .values()
        .map(|s| PanoNode {
            id: s.id.clone(),
            image: s.id.clone(),
            position: s.position() * scale,
            rotation: s.rotation,
            missing_image: false,
        })
        .collect();

    for node in &nodes {
        let tilt = up_tilt_deg(node)?;
        if tilt > TILT_WARNING_DEG {
            log::warn!("panorama {} up axis tilted {tilt:.1}° from world up", node.id);
        }
    }

    let mut edges = Vec::new();
    for (i, from) in nodes.iter().enumerate() {
        let mut candidates: Vec<(f64, usize)> = nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, to)| ((to.position - from.position).norm(), j))
            .filter(|(d, j)| {
                if *d == 0.0 {
                    log::warn!("panoramas {} and {} coincide; not linked", from.id, nodes[*j].id);
                    return false;
                }
                options.max_distance.is_none_or(|max| *d <= max)
            })
            .collect();
        // Nodes are sorted by id, so index order is id order.
        candidates.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        candidates.truncate(options.max_neighbors);
        let Some(&(d_min, _)) = candidates.first() else {
            continue;
        };
        let d_max = candidates.last().map_or(d_min, |c| c.0);
        for (distance, j) in candidates {
            let (yaw_deg, pitch_deg) = bearing(from, &nodes[j])?;
            let (color, size_px) = style(distance, d_min, d_max, options.min_size, options.max_size)?;
            edges.push(Hotspot {
                from_id: from.id.clone(),
                to_id: nodes[j].id.clone(),
                yaw_deg,
                pitch_deg,
                distance,
                color,
                size_px,
            });
        }
    }
    Ok(TourGraph {
        nodes,
        edges,
        options: *options,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TourDocument {
    version: u32,
    units: Units,
    nodes: Vec<NodeEntry>,
    edges: Vec<Hotspot>,
    generated: Generated,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    image: String,
    position: [f64; 3],
    #[serde(default)]
    missing_image: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Generated {
    max_neighbors: usize,
    max_distance: Option<f64>,
}

pub const TOUR_VERSION: u32 = 1;

/// Serialize to `tour.json`. Output is deterministic for a given graph.
pub fn emit_tour(graph: &TourGraph) -> String {
    let doc = TourDocument {
        version: TOUR_VERSION,
        units: graph.options.units(),
        nodes: graph
            .nodes
            .iter()
            .map(|n| NodeEntry {
                id: n.id.clone(),
                image: n.image.clone(),
                position: [n.position.x, n.position.y, n.position.z],
                missing_image: n.missing_image,
            })
            .collect(),
        edges: graph.edges.clone(),
        generated: Generated {
            max_neighbors: graph.options.max_neighbors,
            max_distance: graph.options.max_distance,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("tour serializes");
    text.push('\n');
    text
}

/// Parse and validate a `tour.json` document. Node rotations are not part
/// of the format and come back as zero.
pub fn parse_tour(text: &str) -> Result<TourGraph> {
    let doc: TourDocument = serde_json::from_str(text)?;
    if doc.version != TOUR_VERSION {
        return Err(Error::SchemaError("version".into()));
    }
    let nodes: Vec<PanoNode> = doc
        .nodes
        .into_iter()
        .map(|n| PanoNode {
            id: n.id,
            image: n.image,
            position: Vector3::from(n.position),
            rotation: Vector3::zeros(),
            missing_image: n.missing_image,
        })
        .collect();
    for (i, e) in doc.edges.iter().enumerate() {
        let exists = |id: &str| nodes.iter().any(|n| n.id == id);
        if !exists(&e.from_id) || !exists(&e.to_id) || e.from_id == e.to_id {
            return Err(Error::SchemaError(format!("edges[{i}]")));
        }
        if !(e.yaw_deg > -180.0 && e.yaw_deg <= 180.0) {
            return Err(Error::SchemaError(format!("edges[{i}].yaw_deg")));
        }
        if !(-90.0..=90.0).contains(&e.pitch_deg) {
            return Err(Error::SchemaError(format!("edges[{i}].pitch_deg")));
        }
        if e.distance.is_nan() || e.distance <= 0.0 {
            return Err(Error::SchemaError(format!("edges[{i}].distance")));
        }
    }
    let options = TourOptions {
        max_neighbors: doc.generated.max_neighbors,
        max_distance: doc.generated.max_distance,
        scale: match doc.units {
            Units::Meters => Some(1.0),
            Units::Reconstruction => None,
        },
        ..Default::default()
    };
    Ok(TourGraph {
        nodes,
        edges: doc.edges,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfm::{Camera, Shot};

    fn node(id: &str, p: [f64; 3]) -> PanoNode {
        PanoNode {
            id: id.into(),
            image: id.into(),
            position: Vector3::from(p),
            rotation: Vector3::zeros(),
            missing_image: false,
        }
    }

    pub(crate) fn line_rec(xs: &[f64]) -> Reconstruction {
        let mut rec = Reconstruction::default();
        rec.cameras.insert("c".into(), Camera::equirectangular(64, 32));
        for (i, x) in xs.iter().enumerate() {
            let id = format!("pano_{i}.jpg");
            rec.shots.insert(
                id.clone(),
                Shot::from_position(id, "c", Vector3::zeros(), Vector3::new(*x, 0.0, 0.0)).unwrap(),
            );
        }
        rec
    }

    fn edge_pairs(g: &TourGraph) -> Vec<(usize, usize)> {
        let idx = |id: &str| g.nodes.iter().position(|n| n.id == id).unwrap();
        g.edges.iter().map(|e| (idx(&e.from_id), idx(&e.to_id))).collect()
    }

    #[test]
    fn cardinal_bearings() {
        let o = node("o", [0.0; 3]);
        assert_eq!(bearing(&o, &node("f", [0.0, 0.0, 1.0])).unwrap(), (0.0, 0.0));
        assert_eq!(bearing(&o, &node("r", [1.0, 0.0, 0.0])).unwrap(), (90.0, 0.0));
        assert_eq!(bearing(&o, &node("u", [0.0, -1.0, 0.0])).unwrap(), (0.0, 90.0));
        assert_eq!(bearing(&o, &node("d", [0.0, 1.0, 0.0])).unwrap(), (0.0, -90.0));
        assert_eq!(bearing(&o, &node("b", [0.0, 0.0, -1.0])).unwrap(), (180.0, 0.0));
        assert!(matches!(
            bearing(&o, &node("o2", [0.0; 3])),
            Err(Error::DegenerateEdge { .. })
        ));
    }

    #[test]
    fn style_endpoints() {
        assert_eq!(style(2.0, 2.0, 2.0, 10, 30).unwrap(), ([255, 0, 0], 30));
        assert_eq!(style(5.0, 1.0, 5.0, 10, 30).unwrap(), ([0, 0, 255], 10));
        assert_eq!(style(3.0, 1.0, 5.0, 10, 30).unwrap(), ([128, 0, 128], 20));
        assert!(matches!(
            style(6.0, 1.0, 5.0, 10, 30),
            Err(Error::RangeError { .. })
        ));
    }

    #[test]
    fn single_shot_no_edges() {
        let g = build_graph(&line_rec(&[0.0]), &TourOptions::default()).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn collinear_nearest_neighbour() {
        let opts = TourOptions {
            max_neighbors: 1,
            ..Default::default()
        };
        let g = build_graph(&line_rec(&[0.0, 1.0, 5.0]), &opts).unwrap();
        assert_eq!(edge_pairs(&g), [(0, 1), (1, 0), (2, 1)]);
        let g = build_graph(&line_rec(&[0.0, 1.0, 1.5]), &opts).unwrap();
        assert_eq!(edge_pairs(&g), [(0, 1), (1, 2), (2, 1)]);
    }

    #[test]
    fn tie_breaks_by_id() {
        let opts = TourOptions {
            max_neighbors: 1,
            ..Default::default()
        };
        let g = build_graph(&line_rec(&[0.0, -1.0, 1.0]), &opts).unwrap();
        assert_eq!(edge_pairs(&g)[0], (0, 1));
    }

    #[test]
    fn distance_cap() {
        let opts = TourOptions {
            max_neighbors: 4,
            max_distance: Some(2.0),
            ..Default::default()
        };
        let g = build_graph(&line_rec(&[0.0, 1.0, 5.0]), &opts).unwrap();
        assert_eq!(edge_pairs(&g), [(0, 1), (1, 0)]);
    }

    #[test]
    fn empty_model() {
        assert!(matches!(
            build_graph(&Reconstruction::default(), &TourOptions::default()),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn scale_sets_units() {
        let opts = TourOptions {
            scale: Some(2.0),
            ..Default::default()
        };
        let g = build_graph(&line_rec(&[0.0, 1.0]), &opts).unwrap();
        assert_eq!(g.edges[0].distance, 2.0);
        assert!(emit_tour(&g).contains("\"units\": \"meters\""));
    }

    #[test]
    fn emit_parse_emit_is_identical() {
        let g = build_graph(&line_rec(&[0.0, 1.0, 5.0, 2.25]), &TourOptions::default()).unwrap();
        let text = emit_tour(&g);
        let again = emit_tour(&parse_tour(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn one_node_document() {
        let g = build_graph(&line_rec(&[3.0]), &TourOptions::default()).unwrap();
        let text = emit_tour(&g);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 1);
        assert!(v["edges"].as_array().unwrap().is_empty());
        assert_eq!(v["version"], 1);
        assert_eq!(v["units"], "reconstruction");
        assert!(v["generated"]["max_distance"].is_null());
    }

    #[test]
    fn parse_rejects_dangling_edge() {
        let g = build_graph(&line_rec(&[0.0, 1.0]), &TourOptions::default()).unwrap();
        let text = emit_tour(&g).replace("\"to\": \"pano_1.jpg\"", "\"to\": \"ghost\"");
        assert!(matches!(parse_tour(&text), Err(Error::SchemaError(_))));
    }
}
