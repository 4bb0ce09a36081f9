//! 21-keypoint hand skeleton and its ellipsoid primitives.
//!
//! Every edge of the skeleton becomes one prolate ellipsoid whose long axis
//! joins the two keypoints of the edge. The two short semi-axes are equal and
//! a fixed fraction of the long semi-axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Keypoints, Point3, KEYPOINT_COUNT};

/// Ratio of the short semi-axis to the long semi-axis used by default.
pub const DEFAULT_SHORT_TO_LONG_RATIO: f64 = 0.5;

/// Minimum separation between the two keypoints of an edge, in meters.
pub const MIN_EDGE_LENGTH: f64 = 1e-9;

const DEFAULT_EDGES: [(usize, usize); KEYPOINT_COUNT] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (0, 5),
    (5, 6),
    (6, 7),
    (7, 8),
    (5, 9),
    (9, 10),
    (10, 11),
    (11, 12),
    (9, 13),
    (13, 14),
    (14, 15),
    (15, 16),
    (13, 17),
    (0, 17),
    (17, 18),
    (18, 19),
    (19, 20),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HandError {
    #[error("invalid skeleton topology: {0}")]
    InvalidTopology(String),
    #[error("degenerate primitive on edge {edge} ({i}, {j}): keypoints coincide")]
    DegeneratePrimitive { edge: usize, i: usize, j: usize },
    #[error("keypoint {0} is not finite")]
    NonFiniteKeypoint(usize),
    #[error("short-to-long ratio must be in (0, 1], got {0}")]
    InvalidRatio(f64),
}

/// Ordered list of the 21 keypoint pairs forming the hand primitives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct SkeletonTopology {
    edges: Vec<(usize, usize)>,
}

impl SkeletonTopology {
    /// Validates an edge list: 21 edges over keypoints `0..21`, no duplicates
    /// (in either orientation), no self loops, and a connected edge graph.
    pub fn new(edges: Vec<(usize, usize)>) -> Result<Self, HandError> {
        if edges.len() != KEYPOINT_COUNT {
            return Err(HandError::InvalidTopology(format!(
                "expected {KEYPOINT_COUNT} edges, got {}",
                edges.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j) in &edges {
            if i >= KEYPOINT_COUNT || j >= KEYPOINT_COUNT {
                return Err(HandError::InvalidTopology(format!(
                    "edge ({i}, {j}) references a keypoint outside 0..{}",
                    KEYPOINT_COUNT - 1
                )));
            }
            if i == j {
                return Err(HandError::InvalidTopology(format!("self loop on keypoint {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(HandError::InvalidTopology(format!("duplicate edge ({i}, {j})")));
            }
        }
        if !is_connected(&edges) {
            return Err(HandError::InvalidTopology(
                "edge graph does not connect all keypoints".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl Default for SkeletonTopology {
    fn default() -> Self {
        default_topology()
    }
}

impl TryFrom<Vec<(usize, usize)>> for SkeletonTopology {
    type Error = HandError;

    fn try_from(edges: Vec<(usize, usize)>) -> Result<Self, Self::Error> {
        Self::new(edges)
    }
}

impl From<SkeletonTopology> for Vec<(usize, usize)> {
    fn from(topology: SkeletonTopology) -> Self {
        topology.edges
    }
}

/// The standard hand-landmark connection list: four chains per finger plus
/// palm edges joining the finger bases.
pub fn default_topology() -> SkeletonTopology {
    SkeletonTopology {
        edges: DEFAULT_EDGES.to_vec(),
    }
}

fn is_connected(edges: &[(usize, usize)]) -> bool {
    // union-find over the keypoints
    let mut parent: Vec<usize> = (0..KEYPOINT_COUNT).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    (1..KEYPOINT_COUNT).all(|k| find(&mut parent, k) == root)
}

/// One ellipsoid approximating a hand segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub center: Point3,
    /// Long semi-axis, meters.
    pub half_length_long: f64,
    /// Short semi-axis (both short axes are equal), meters.
    pub half_length_short: f64,
    /// Unit vector along the long axis, pointing from the second keypoint of
    /// the edge towards the first.
    pub axis: Point3,
}

/// Skeleton topology together with the primitive shape ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    pub topology: SkeletonTopology,
    short_to_long_ratio: f64,
}

impl Default for HandModel {
    fn default() -> Self {
        Self {
            topology: default_topology(),
            short_to_long_ratio: DEFAULT_SHORT_TO_LONG_RATIO,
        }
    }
}

impl HandModel {
    pub fn new(topology: SkeletonTopology, short_to_long_ratio: f64) -> Result<Self, HandError> {
        if !(short_to_long_ratio > 0.0 && short_to_long_ratio <= 1.0) {
            return Err(HandError::InvalidRatio(short_to_long_ratio));
        }
        Ok(Self {
            topology,
            short_to_long_ratio,
        })
    }

    pub fn short_to_long_ratio(&self) -> f64 {
        self.short_to_long_ratio
    }

    pub fn primitives(&self, keypoints: &Keypoints) -> Result<Vec<Primitive>, HandError> {
        primitives_with_ratio(keypoints, &self.topology, self.short_to_long_ratio)
    }
}

/// Builds one primitive per topology edge with the default shape ratio.
pub fn build_primitives(
    keypoints: &Keypoints,
    topology: &SkeletonTopology,
) -> Result<Vec<Primitive>, HandError> {
    primitives_with_ratio(keypoints, topology, DEFAULT_SHORT_TO_LONG_RATIO)
}

fn primitives_with_ratio(
    keypoints: &Keypoints,
    topology: &SkeletonTopology,
    ratio: f64,
) -> Result<Vec<Primitive>, HandError> {
    if let Some(bad) = keypoints.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(HandError::NonFiniteKeypoint(bad));
    }
    topology
        .edges()
        .iter()
        .enumerate()
        .map(|(edge, &(i, j))| {
            let (pi, pj) = (keypoints[i], keypoints[j]);
            let span = pi - pj;
            let length = span.norm();
            if length <= MIN_EDGE_LENGTH {
                return Err(HandError::DegeneratePrimitive { edge, i, j });
            }
            let half_length_long = length / 2.0;
            Ok(Primitive {
                center: (pi + pj) / 2.0,
                half_length_long,
                half_length_short: half_length_long * ratio,
                axis: span / length,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};
    use proptest::prelude::*;

    fn keypoints_from(flat: &[f64]) -> Keypoints {
        let mut kp = [Point3::zeros(); KEYPOINT_COUNT];
        for (k, p) in kp.iter_mut().enumerate() {
            *p = Point3::new(flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]);
        }
        kp
    }

    #[test]
    fn default_topology_is_valid() {
        let topo = default_topology();
        assert_eq!(topo.edges().len(), 21);
        assert_eq!(topo.edges()[0], (0, 1));
        assert!(topo.edges().iter().all(|&(i, j)| i < 21 && j < 21));
        // re-validating through the checked constructor must succeed
        SkeletonTopology::new(topo.edges().to_vec()).unwrap();
    }

    #[test]
    fn default_topology_connectivity_by_search() {
        // independent check: breadth-first search from the wrist
        let topo = default_topology();
        let mut visited = [false; 21];
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(k) = queue.pop_front() {
            for &(i, j) in topo.edges() {
                let next = if i == k { j } else if j == k { i } else { continue };
                if !visited[next] {
                    visited[next] = true;
                    queue.push_back(next);
                }
            }
        }
        assert!(visited.iter().all(|&v| v));
    }

    #[test]
    fn topology_rejects_bad_edge_lists() {
        let mut edges = DEFAULT_EDGES.to_vec();
        edges.pop();
        assert!(SkeletonTopology::new(edges).is_err());

        let mut edges = DEFAULT_EDGES.to_vec();
        edges[3] = (3, 21);
        assert!(SkeletonTopology::new(edges).is_err());

        let mut edges = DEFAULT_EDGES.to_vec();
        edges[3] = (1, 0);
        assert!(matches!(
            SkeletonTopology::new(edges),
            Err(HandError::InvalidTopology(m)) if m.contains("duplicate")
        ));

        // 21 distinct edges that leave keypoint 20 isolated
        let mut edges = DEFAULT_EDGES.to_vec();
        edges[20] = (2, 8);
        assert!(matches!(
            SkeletonTopology::new(edges),
            Err(HandError::InvalidTopology(m)) if m.contains("connect")
        ));
    }

    #[test]
    fn topology_json_roundtrip() {
        let json = serde_json::to_string(&default_topology()).unwrap();
        assert!(json.starts_with("[[0,1],[1,2]"));
        let back: SkeletonTopology = serde_json::from_str(&json).unwrap();
        assert_eq!(back, default_topology());
        assert!(serde_json::from_str::<SkeletonTopology>("[[0,1]]").is_err());
    }

    #[test]
    fn single_edge_geometry() {
        let mut kp = [Point3::zeros(); KEYPOINT_COUNT];
        for (k, p) in kp.iter_mut().enumerate() {
            *p = Point3::new(k as f64, 0.0, 1.0);
        }
        kp[0] = Point3::new(0.0, 0.0, 0.0);
        kp[1] = Point3::new(0.0, 0.0, 0.04);
        let prims = build_primitives(&kp, &default_topology()).unwrap();
        let p = prims[0];
        assert_eq!(p.center, Point3::new(0.0, 0.0, 0.02));
        assert!((p.half_length_long - 0.02).abs() < 1e-15);
        assert!((p.half_length_short - 0.01).abs() < 1e-15);
        assert_eq!(p.axis, Point3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn coincident_keypoints_are_degenerate() {
        let mut kp = [Point3::zeros(); KEYPOINT_COUNT];
        for (k, p) in kp.iter_mut().enumerate() {
            *p = Point3::new(k as f64 * 0.01, 0.0, 0.5);
        }
        kp[4] = kp[3];
        let err = build_primitives(&kp, &default_topology()).unwrap_err();
        assert_eq!(err, HandError::DegeneratePrimitive { edge: 3, i: 3, j: 4 });
    }

    #[test]
    fn non_finite_keypoint_rejected() {
        let mut kp = [Point3::new(0.1, 0.2, 0.3); KEYPOINT_COUNT];
        kp[7].y = f64::NAN;
        assert_eq!(
            build_primitives(&kp, &default_topology()).unwrap_err(),
            HandError::NonFiniteKeypoint(7)
        );
    }

    #[test]
    fn configurable_ratio() {
        let model = HandModel::new(default_topology(), 0.25).unwrap();
        let kp = keypoints_from(&(0..63).map(|k| (k as f64 * 0.37).sin()).collect::<Vec<_>>());
        for p in model.primitives(&kp).unwrap() {
            assert!((p.half_length_short - 0.25 * p.half_length_long).abs() < 1e-15);
        }
        assert!(HandModel::new(default_topology(), 0.0).is_err());
        assert!(HandModel::new(default_topology(), 1.5).is_err());
    }

    fn keypoint_strategy() -> impl Strategy<Value = Keypoints> {
        prop::collection::vec(-0.5f64..0.5, 63).prop_map(|v| keypoints_from(&v))
    }

    proptest! {
        #[test]
        fn primitives_satisfy_definitions(kp in keypoint_strategy()) {
            let topo = default_topology();
            let prims = build_primitives(&kp, &topo).unwrap();
            for (p, &(i, j)) in prims.iter().zip(topo.edges()) {
                prop_assert!((p.axis.norm() - 1.0).abs() < 1e-12);
                prop_assert!(p.half_length_long > 0.0);
                prop_assert_eq!(p.half_length_short, p.half_length_long / 2.0);
                let (di, dj) = ((p.center - kp[i]).norm(), (p.center - kp[j]).norm());
                prop_assert!((di - dj).abs() <= 1e-12 * di.max(dj));
                prop_assert!((di - p.half_length_long).abs() <= 1e-12);
            }
        }

        #[test]
        fn translation_equivariance(
            kp in keypoint_strategy(),
            d in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let d = Vector3::from(d);
            let moved: Keypoints = kp.map(|p| p + d);
            let topo = default_topology();
            let a = build_primitives(&kp, &topo).unwrap();
            let b = build_primitives(&moved, &topo).unwrap();
            for (pa, pb) in a.iter().zip(&b) {
                prop_assert!((pb.center - (pa.center + d)).norm() < 1e-12);
                prop_assert!((pb.half_length_long - pa.half_length_long).abs() < 1e-12);
                prop_assert!((pb.half_length_short - pa.half_length_short).abs() < 1e-12);
                prop_assert!((pb.axis - pa.axis).norm() < 1e-10);
            }
        }

        #[test]
        fn rotation_equivariance(
            kp in keypoint_strategy(),
            w in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let rot = Rotation3::new(Vector3::from(w));
            let turned: Keypoints = kp.map(|p| rot * p);
            let topo = default_topology();
            let a = build_primitives(&kp, &topo).unwrap();
            let b = build_primitives(&turned, &topo).unwrap();
            for (pa, pb) in a.iter().zip(&b) {
                prop_assert!((pb.center - rot * pa.center).norm() < 1e-10);
                prop_assert!((pb.axis - rot * pa.axis).norm() < 1e-10);
                prop_assert!((pb.half_length_long - pa.half_length_long).abs() < 1e-10);
                prop_assert!((pb.half_length_short - pa.half_length_short).abs() < 1e-10);
            }
        }
    }
}
