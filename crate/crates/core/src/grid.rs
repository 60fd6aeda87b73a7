//! Curves in the punctured plane and the grid complex `G_ε`.
//!
//! `G_ε` is the unit grid with the ε-disc around every lattice point removed
//! and the boundary circles put back. Its vertices are the four points at
//! distance ε from each lattice point (south, east, north, west); its edges
//! are quarter-arcs between neighbouring vertices around a lattice point and
//! straight runs of length `1 − 2ε` between lattice points.
//!
//! Based at the south vertex of the origin, the generators of `π₁(G_ε/ℤ²)` are
//!
//! * `a`: south → west → north around the origin (clockwise), then straight up;
//! * `b`: south → east (counterclockwise), straight right, west → south;
//! * `c`: the full counterclockwise loop south → east → north → west → south.
//!
//! A closed walk is read back as a word through the spanning tree made of the
//! counterclockwise arcs south → east → north → west: the closing arc
//! west → south reads `c`, a step up reads `ca` and a step right reads `bC`
//! (inverses for the opposite directions); all other arcs read nothing.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::decompose;
use crate::relator::is_in_n;
use crate::word::{Generator, Word};

/// Crossings closer than this to a vertex of `G_ε`, and polyline vertices
/// closer than this to a grid line, are rejected.
pub const GENERAL_POSITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("epsilon must lie in (0, 0.1), got {0}")]
    InvalidEpsilon(f64),
    #[error("word {word} is not closed: displacement {displacement:?}")]
    NotClosed { word: Word, displacement: (i64, i64) },
    #[error("malformed cycle: nodes {index} and {next} are not adjacent")]
    MalformedCycle { index: usize, next: usize },
    #[error("curve not in general position near ({}, {}): {reason}", location[0], location[1])]
    NotGeneralPosition { location: [f64; 2], reason: &'static str },
    #[error("curve enters the ε-disc around lattice point {lattice:?} (distance {distance})")]
    InsideForbiddenZone { lattice: (i64, i64), distance: f64 },
    #[error("curve needs at least two distinct points")]
    DegenerateCurve,
    #[error("certificate failed self-check: {0}")]
    CertificateCheck(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridModel {
    epsilon: f64,
}

impl GridModel {
    pub fn new(epsilon: f64) -> Result<Self, GridError> {
        if epsilon > 0.0 && epsilon < 0.1 {
            Ok(GridModel { epsilon })
        } else {
            Err(GridError::InvalidEpsilon(epsilon))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Length of a straight run between two lattice points.
    pub fn straight_length(&self) -> f64 {
        1.0 - 2.0 * self.epsilon
    }

    /// Length of a quarter-arc.
    pub fn arc_length(&self) -> f64 {
        FRAC_PI_2 * self.epsilon
    }

    /// Area of one cell with its four quarter-discs removed.
    pub fn face_area(&self) -> f64 {
        1.0 - PI * self.epsilon * self.epsilon
    }
}

/// Position of a vertex of `G_ε` relative to its lattice point, in
/// counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    South,
    East,
    North,
    West,
}

impl Side {
    pub const CCW: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];

    fn index(self) -> usize {
        match self {
            Side::South => 0,
            Side::East => 1,
            Side::North => 2,
            Side::West => 3,
        }
    }

    fn angle(self) -> f64 {
        match self {
            Side::South => -FRAC_PI_2,
            Side::East => 0.0,
            Side::North => FRAC_PI_2,
            Side::West => PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub x: i64,
    pub y: i64,
    pub side: Side,
}

impl Node {
    pub const fn new(x: i64, y: i64, side: Side) -> Self {
        Node { x, y, side }
    }

    pub fn position(&self, epsilon: f64) -> [f64; 2] {
        let angle = self.side.angle();
        [self.x as f64 + epsilon * angle.cos(), self.y as f64 + epsilon * angle.sin()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Arc { ccw: bool },
    Straight,
}

/// The edge of `G_ε` joining `from` to `to`, if any.
pub fn edge_between(from: Node, to: Node) -> Option<EdgeKind> {
    use Side::*;
    if (from.x, from.y) == (to.x, to.y) {
        let step = (to.side.index() + 4 - from.side.index()) % 4;
        return match step {
            1 => Some(EdgeKind::Arc { ccw: true }),
            3 => Some(EdgeKind::Arc { ccw: false }),
            _ => None,
        };
    }
    let straight = matches!(
        ((to.x - from.x, to.y - from.y), from.side, to.side),
        ((0, 1), North, South) | ((0, -1), South, North) | ((1, 0), East, West) | ((-1, 0), West, East)
    );
    straight.then_some(EdgeKind::Straight)
}

/// A closed walk on `G_ε`.
///
/// `nodes[0]` is the basepoint; consecutive nodes are joined by edges and the
/// last node is joined back to the first. A single node is the trivial cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCycle {
    pub nodes: Vec<Node>,
    pub epsilon: f64,
}

impl GridCycle {
    pub fn trivial(basepoint: Node, epsilon: f64) -> Self {
        GridCycle { nodes: vec![basepoint], epsilon }
    }

    pub fn basepoint(&self) -> Node {
        self.nodes[0]
    }

    pub fn is_trivial(&self) -> bool {
        self.nodes.len() <= 1
    }

    /// Directed edges `(from, to)` in walk order, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        let n = if self.is_trivial() { 0 } else { self.nodes.len() };
        (0..n).map(move |i| (self.nodes[i], self.nodes[(i + 1) % n]))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(GridError::MalformedCycle { index: 0, next: 0 });
        }
        if n == 1 {
            return Ok(());
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if edge_between(self.nodes[i], self.nodes[j]).is_none() {
                return Err(GridError::MalformedCycle { index: i, next: j });
            }
        }
        Ok(())
    }

    /// No edge is immediately followed by its reverse, cyclically.
    pub fn is_geometrically_irreducible(&self) -> bool {
        let n = self.nodes.len();
        match n {
            1 => true,
            2 => false,
            _ => (0..n).all(|i| self.nodes[(i + n - 1) % n] != self.nodes[(i + 1) % n]),
        }
    }

    pub fn straight_count(&self) -> usize {
        self.edges().filter(|&(a, b)| edge_between(a, b) == Some(EdgeKind::Straight)).count()
    }

    pub fn arc_count(&self) -> usize {
        self.edges().count() - self.straight_count()
    }

    /// Euclidean length.
    pub fn length(&self) -> f64 {
        let model = GridModel { epsilon: self.epsilon };
        self.straight_count() as f64 * model.straight_length() + self.arc_count() as f64 * model.arc_length()
    }
}

/// Removes backtracks from a cyclic walk, including across the closing edge.
fn reduce_walk(walk: &[Node]) -> Vec<Node> {
    let mut stack: Vec<Node> = Vec::with_capacity(walk.len() + 1);
    for &node in walk.iter().chain(walk.first()) {
        if stack.last() == Some(&node) {
            continue;
        }
        if stack.len() >= 2 && stack[stack.len() - 2] == node {
            stack.pop();
        } else {
            stack.push(node);
        }
    }
    // stack now starts and ends at the basepoint (or is a single node).
    while stack.len() >= 3 && stack[1] == stack[stack.len() - 2] {
        stack.pop();
        stack.remove(0);
    }
    if stack.len() > 1 {
        stack.pop();
    }
    stack
}

/// Nodes visited by one generator path starting at the south vertex of
/// `(x, y)`, excluding the start, and the lattice displacement.
fn letter_path(generator: Generator, inverted: bool, x: i64, y: i64) -> (Vec<Node>, (i64, i64)) {
    use Side::*;
    let at = |dx: i64, dy: i64, side| Node::new(x + dx, y + dy, side);
    match (generator, inverted) {
        (Generator::A, false) => (vec![at(0, 0, West), at(0, 0, North), at(0, 1, South)], (0, 1)),
        (Generator::A, true) => (vec![at(0, -1, North), at(0, -1, West), at(0, -1, South)], (0, -1)),
        (Generator::B, false) => (vec![at(0, 0, East), at(1, 0, West), at(1, 0, South)], (1, 0)),
        (Generator::B, true) => (vec![at(0, 0, West), at(-1, 0, East), at(-1, 0, South)], (-1, 0)),
        (Generator::C, false) => (vec![at(0, 0, East), at(0, 0, North), at(0, 0, West), at(0, 0, South)], (0, 0)),
        (Generator::C, true) => (vec![at(0, 0, West), at(0, 0, North), at(0, 0, East), at(0, 0, South)], (0, 0)),
    }
}

/// The geometrically irreducible cycle `γ(w)` of a closed word.
///
/// The generator paths are laid end to end from the south vertex of the
/// origin and backtracks are cancelled, cyclically.
pub fn word_to_cycle(w: &Word, model: &GridModel) -> Result<GridCycle, GridError> {
    let displacement = w.abelianize_ab();
    if displacement != (0, 0) {
        return Err(GridError::NotClosed { word: w.clone(), displacement });
    }
    let start = Node::new(0, 0, Side::South);
    let mut walk = vec![start];
    let (mut x, mut y) = (0, 0);
    for letter in w.free_reduce().letters() {
        let (nodes, (dx, dy)) = letter_path(letter.generator, letter.inverted, x, y);
        walk.extend(nodes);
        x += dx;
        y += dy;
    }
    // The walk ends back at `start`; drop the duplicate before reducing.
    walk.pop();
    let nodes = if walk.is_empty() { vec![start] } else { reduce_walk(&walk) };
    Ok(GridCycle { nodes, epsilon: model.epsilon })
}

fn edge_word(from: Node, to: Node) -> Option<&'static str> {
    use Side::*;
    Some(match edge_between(from, to)? {
        EdgeKind::Arc { .. } => match (from.side, to.side) {
            (West, South) => "c",
            (South, West) => "C",
            _ => "",
        },
        EdgeKind::Straight => match (to.x - from.x, to.y - from.y) {
            (0, 1) => "ca",
            (0, -1) => "AC",
            (1, 0) => "bC",
            _ => "cB",
        },
    })
}

/// Reads a closed walk as a cyclically reduced word (defined up to rotation).
pub fn cycle_to_word(cycle: &GridCycle) -> Result<Word, GridError> {
    cycle.validate()?;
    let mut pieces = Vec::with_capacity(cycle.nodes.len());
    let n = cycle.nodes.len();
    for (i, (from, to)) in cycle.edges().enumerate() {
        let text = edge_word(from, to).ok_or(GridError::MalformedCycle { index: i, next: (i + 1) % n })?;
        pieces.push(crate::word::w(text));
    }
    Ok(Word::product(&pieces).cyclic_reduce().core)
}

/// A closed polyline in the plane; the last point joins back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        Polyline { points }
    }

    /// Closed segments `(start, end)`, skipping repeated points.
    pub fn segments(&self) -> Vec<([f64; 2], [f64; 2])> {
        let n = self.points.len();
        (0..n).map(|i| (self.points[i], self.points[(i + 1) % n])).filter(|(a, b)| a != b).collect()
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|&(a, b)| dist(a, b)).sum()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polyline {
        Polyline::new(self.points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect())
    }
}

/// Straight part of `G_ε` between two adjacent lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StraightEdge {
    /// On the line `x = x`, between `(x, y)` and `(x, y + 1)`.
    Vertical { x: i64, y: i64 },
    /// On the line `y = y`, between `(x, y)` and `(x + 1, y)`.
    Horizontal { x: i64, y: i64 },
}

impl StraightEdge {
    fn endpoint(self) -> Node {
        match self {
            StraightEdge::Vertical { x, y } => Node::new(x, y, Side::North),
            StraightEdge::Horizontal { x, y } => Node::new(x, y, Side::East),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Crossing {
    /// Arc-length position along the polyline.
    s: f64,
    point: [f64; 2],
    edge: StraightEdge,
}

/// How a sub-arc between consecutive grid crossings was replaced by a path on
/// the boundary of its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapCase {
    /// Endpoints on adjacent sides; replaced through the shared corner arc.
    AdjacentSides,
    /// Endpoints on opposite sides; replaced by the shorter way round.
    OppositeSides,
    /// Both endpoints on one side (or no crossings at all).
    SameSide,
}

impl SnapCase {
    pub fn number(self) -> u8 {
        match self {
            SnapCase::AdjacentSides => 1,
            SnapCase::OppositeSides => 2,
            SnapCase::SameSide => 3,
        }
    }

    /// Certified bound on the area swept when homotoping a sub-arc of the
    /// given length onto the boundary path.
    pub fn area_bound(self, arc_length: f64) -> f64 {
        match self {
            SnapCase::AdjacentSides => SQRT_2 * arc_length,
            SnapCase::OppositeSides | SnapCase::SameSide => arc_length,
        }
    }

    /// Bound on the boundary path length relative to the sub-arc length.
    pub fn length_factor(self) -> f64 {
        match self {
            SnapCase::AdjacentSides => SQRT_2,
            SnapCase::OppositeSides => 2.0,
            SnapCase::SameSide => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapRecord {
    pub case: SnapCase,
    pub cell: (i64, i64),
    pub arc_length: f64,
    pub path_length: f64,
    pub area_bound: f64,
}

impl SnapRecord {
    pub fn within_bounds(&self) -> bool {
        let slack = 1e-12 * (1.0 + self.arc_length);
        self.path_length <= self.case.length_factor() * self.arc_length + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapTrace {
    pub records: Vec<SnapRecord>,
}

impl SnapTrace {
    pub fn homotopy_area(&self) -> f64 {
        self.records.iter().map(|r| r.area_bound).sum()
    }

    pub fn path_length(&self) -> f64 {
        self.records.iter().map(|r| r.path_length).sum()
    }
}

fn not_general(location: [f64; 2], reason: &'static str) -> GridError {
    GridError::NotGeneralPosition { location, reason }
}

fn distance_to_integer(v: f64) -> f64 {
    (v - v.round()).abs()
}

fn check_clearance(segments: &[([f64; 2], [f64; 2])], epsilon: f64) -> Result<(), GridError> {
    for &(a, b) in segments {
        for p in [a, b] {
            if distance_to_integer(p[0]) < GENERAL_POSITION_TOL || distance_to_integer(p[1]) < GENERAL_POSITION_TOL {
                return Err(not_general(p, "polyline vertex lies on a grid line"));
            }
        }
        let x0 = a[0].min(b[0]).floor() as i64 - 1;
        let x1 = a[0].max(b[0]).ceil() as i64 + 1;
        let y0 = a[1].min(b[1]).floor() as i64 - 1;
        let y1 = a[1].max(b[1]).ceil() as i64 + 1;
        for lx in x0..=x1 {
            for ly in y0..=y1 {
                let d = point_segment_distance([lx as f64, ly as f64], a, b);
                if d <= epsilon {
                    return Err(GridError::InsideForbiddenZone { lattice: (lx, ly), distance: d });
                }
            }
        }
    }
    Ok(())
}

fn collect_crossings(segments: &[([f64; 2], [f64; 2])], epsilon: f64) -> Result<Vec<Crossing>, GridError> {
    let mut crossings = Vec::new();
    let mut offset = 0.0;
    for &(a, b) in segments {
        let len = dist(a, b);
        let mut local: Vec<(f64, [f64; 2], StraightEdge)> = Vec::new();
        for axis in 0..2 {
            if a[axis] == b[axis] {
                continue;
            }
            let (lo, hi) = (a[axis].min(b[axis]), a[axis].max(b[axis]));
            for line in (lo.ceil() as i64)..=(hi.floor() as i64) {
                let t = (line as f64 - a[axis]) / (b[axis] - a[axis]);
                let mut point = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                point[axis] = line as f64;
                let along = point[1 - axis];
                let cell = along.floor();
                let frac = along - cell;
                if (frac - epsilon).abs() < GENERAL_POSITION_TOL || (1.0 - epsilon - frac).abs() < GENERAL_POSITION_TOL
                {
                    return Err(not_general(point, "crossing too close to a vertex of the grid complex"));
                }
                let edge = if axis == 0 {
                    StraightEdge::Vertical { x: line, y: cell as i64 }
                } else {
                    StraightEdge::Horizontal { x: cell as i64, y: line }
                };
                local.push((t, point, edge));
            }
        }
        local.sort_by(|p, q| p.0.total_cmp(&q.0));
        crossings.extend(local.into_iter().map(|(t, point, edge)| Crossing { s: offset + t * len, point, edge }));
        offset += len;
    }
    Ok(crossings)
}

fn point_at(segments: &[([f64; 2], [f64; 2])], mut s: f64) -> [f64; 2] {
    for &(a, b) in segments {
        let len = dist(a, b);
        if s <= len {
            let t = s / len;
            return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        }
        s -= len;
    }
    segments.last().map(|s| s.1).unwrap_or([0.0, 0.0])
}

/// The boundary of one cell `[x, x+1] × [y, y+1]` of `ℝ² ∖ B(ε)`, traversed
/// counterclockwise: bottom, right, top and left sides, each followed by the
/// quarter-arc at the next corner.
struct CellBoundary {
    x: i64,
    y: i64,
    model: GridModel,
}

impl CellBoundary {
    /// Node `i` (mod 8); side `k` runs from node `2k` to node `2k + 1`.
    fn node(&self, i: usize) -> Node {
        use Side::*;
        let (x, y) = (self.x, self.y);
        match i % 8 {
            0 => Node::new(x, y, East),
            1 => Node::new(x + 1, y, West),
            2 => Node::new(x + 1, y, North),
            3 => Node::new(x + 1, y + 1, South),
            4 => Node::new(x + 1, y + 1, West),
            5 => Node::new(x, y + 1, East),
            6 => Node::new(x, y + 1, South),
            _ => Node::new(x, y, North),
        }
    }

    fn side_of(&self, edge: StraightEdge) -> Option<usize> {
        let (x, y) = (self.x, self.y);
        match edge {
            StraightEdge::Horizontal { x: ex, y: ey } if ex == x && ey == y => Some(0),
            StraightEdge::Vertical { x: ex, y: ey } if ex == x + 1 && ey == y => Some(1),
            StraightEdge::Horizontal { x: ex, y: ey } if ex == x && ey == y + 1 => Some(2),
            StraightEdge::Vertical { x: ex, y: ey } if ex == x && ey == y => Some(3),
            _ => None,
        }
    }

    /// Distance from the start node of `side` to `p`, along the side.
    fn offset(&self, side: usize, p: [f64; 2]) -> f64 {
        let eps = self.model.epsilon();
        let (x, y) = (self.x as f64, self.y as f64);
        match side {
            0 => p[0] - (x + eps),
            1 => p[1] - (y + eps),
            2 => (x + 1.0 - eps) - p[0],
            _ => (y + 1.0 - eps) - p[1],
        }
    }

    /// Boundary path between points on two sides, counterclockwise or
    /// clockwise, as (interior nodes, length).
    fn route(&self, from: (usize, f64), to: (usize, f64), ccw: bool) -> (Vec<Node>, f64) {
        let side_len = self.model.straight_length();
        let arc = self.model.arc_length();
        let ((kx, ox), (ky, oy)) = (from, to);
        if ccw {
            let steps = (ky + 4 - kx) % 4;
            let nodes = (1..=2 * steps).map(|i| self.node(2 * kx + i)).collect();
            let len = (side_len - ox) + oy + steps as f64 * arc + (steps - 1) as f64 * side_len;
            (nodes, len)
        } else {
            let steps = (kx + 4 - ky) % 4;
            let nodes = (0..2 * steps).map(|i| self.node(2 * kx + 8 - i)).collect();
            let len = ox + (side_len - oy) + steps as f64 * arc + (steps - 1) as f64 * side_len;
            (nodes, len)
        }
    }
}

/// Homotopes a closed polyline onto `G_ε`.
///
/// The curve is cut at its crossings with the grid lines. Each piece lies in
/// one cell and is replaced by a path along the cell boundary with the same
/// endpoints; the pieces are joined and backtracks removed. The trace
/// records, per piece, which case applied, the lengths involved and the
/// certified bound on the area swept.
pub fn snap_to_grid(curve: &Polyline, model: &GridModel) -> Result<(GridCycle, SnapTrace), GridError> {
    let segments = curve.segments();
    if segments.len() < 2 {
        return Err(GridError::DegenerateCurve);
    }
    let eps = model.epsilon();
    check_clearance(&segments, eps)?;
    let crossings = collect_crossings(&segments, eps)?;
    let total = curve.length();

    if crossings.is_empty() {
        let p = segments[0].0;
        let record = SnapRecord {
            case: SnapCase::SameSide,
            cell: (p[0].floor() as i64, p[1].floor() as i64),
            arc_length: total,
            path_length: 0.0,
            area_bound: SnapCase::SameSide.area_bound(total),
        };
        let base = Node::new(p[0].floor() as i64, p[1].floor() as i64, Side::North);
        return Ok((GridCycle::trivial(base, eps), SnapTrace { records: vec![record] }));
    }

    let m = crossings.len();
    let mut walk: Vec<Node> = Vec::new();
    let mut records = Vec::with_capacity(m);
    for k in 0..m {
        let from = crossings[k];
        let to = crossings[(k + 1) % m];
        let mut gap = to.s - from.s;
        if k + 1 == m {
            gap += total;
        }
        let mid = point_at(&segments, (from.s + gap / 2.0) % total);
        let cell = CellBoundary { x: mid[0].floor() as i64, y: mid[1].floor() as i64, model: *model };
        let (Some(kx), Some(ky)) = (cell.side_of(from.edge), cell.side_of(to.edge)) else {
            return Err(not_general(mid, "sub-arc between crossings leaves its cell"));
        };
        let a = (kx, cell.offset(kx, from.point));
        let b = (ky, cell.offset(ky, to.point));
        let (case, nodes, path_length) = match (ky + 4 - kx) % 4 {
            0 => (SnapCase::SameSide, Vec::new(), (a.1 - b.1).abs()),
            1 => {
                let (nodes, len) = cell.route(a, b, true);
                (SnapCase::AdjacentSides, nodes, len)
            }
            3 => {
                let (nodes, len) = cell.route(a, b, false);
                (SnapCase::AdjacentSides, nodes, len)
            }
            _ => {
                let ccw = cell.route(a, b, true);
                let cw = cell.route(a, b, false);
                let (nodes, len) = if ccw.1 <= cw.1 { ccw } else { cw };
                (SnapCase::OppositeSides, nodes, len)
            }
        };
        for node in nodes {
            if walk.last() != Some(&node) {
                walk.push(node);
            }
        }
        records.push(SnapRecord {
            case,
            cell: (cell.x, cell.y),
            arc_length: gap,
            path_length,
            area_bound: case.area_bound(gap),
        });
    }
    while walk.len() > 1 && walk.first() == walk.last() {
        walk.pop();
    }

    let nodes = if walk.is_empty() { vec![crossings[0].edge.endpoint()] } else { reduce_walk(&walk) };
    let cycle = GridCycle { nodes, epsilon: eps };
    cycle.validate()?;
    Ok((cycle, SnapTrace { records }))
}

/// Isoperimetric constant for contractible curves in `ℝ² ∖ ℤ²`.
pub const ISOPERIMETRIC_CONSTANT: f64 = 1.0 + SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCertificate {
    pub epsilon: f64,
    pub curve_length: f64,
    pub cycle: GridCycle,
    pub cycle_length: f64,
    pub word: Word,
    pub ab_len: usize,
    pub contractible: bool,
    pub d: Option<usize>,
    /// Sum of the per-piece homotopy area bounds.
    pub homotopy_area: f64,
    /// `homotopy_area + (1 − πε²)·d`, when contractible.
    pub area_bound: Option<f64>,
    pub ratio: Option<f64>,
    pub constant: f64,
    pub trace: SnapTrace,
}

/// Snaps `curve`, reads its word and, when the curve is contractible in
/// `ℝ² ∖ ℤ²`, bounds its filling area by the swept homotopy area plus one
/// face per factor of the word's decomposition.
///
/// Non-contractible curves yield a certificate with `contractible = false`
/// and no area bound. Each inequality the bound relies on is rechecked
/// before returning.
pub fn certify_curve(curve: &Polyline, model: &GridModel) -> Result<CurveCertificate, GridError> {
    let (cycle, trace) = snap_to_grid(curve, model)?;
    let word = cycle_to_word(&cycle)?;
    let curve_length = curve.length();
    let cycle_length = cycle.length();
    let ab_len = word.ab_length();
    let homotopy_area = trace.homotopy_area();
    let contractible = is_in_n(&word);

    let slack = 1e-9 * (1.0 + curve_length);
    if !trace.records.iter().all(SnapRecord::within_bounds) {
        return Err(GridError::CertificateCheck("a snapped piece exceeds its length bound"));
    }
    if !cycle.is_geometrically_irreducible() {
        return Err(GridError::CertificateCheck("snapped cycle has a backtrack"));
    }
    if cycle_length > 2.0 * curve_length + slack {
        return Err(GridError::CertificateCheck("snapped cycle longer than twice the curve"));
    }
    if model.straight_length() * ab_len as f64 > cycle_length + slack {
        return Err(GridError::CertificateCheck("(a,b)-length exceeds cycle length over 1 - 2 epsilon"));
    }

    let (d, area_bound, ratio) = if contractible {
        let decomposition = decompose(&word).map_err(|_| GridError::CertificateCheck("decomposition failed"))?;
        let d = decomposition.len();
        if !word.is_empty() && 2 * d > ab_len {
            return Err(GridError::CertificateCheck("decomposition exceeds half the (a,b)-length"));
        }
        let bound = homotopy_area + model.face_area() * d as f64;
        (Some(d), Some(bound), Some(bound / curve_length))
    } else {
        (None, None, None)
    };

    Ok(CurveCertificate {
        epsilon: model.epsilon(),
        curve_length,
        cycle,
        cycle_length,
        word,
        ab_len,
        contractible,
        d,
        homotopy_area,
        area_bound,
        ratio,
        constant: ISOPERIMETRIC_CONSTANT,
        trace,
    })
}

/// A polyline that follows `cycle` at a small random offset: every vertex of
/// the cycle is pushed out to radius `1.5ε..3ε` at a small angle off its grid
/// line, and arcs are sampled at that radius. The result stays clear of
/// `B(ε)`, avoids the grid lines at its vertices and is homotopic to the
/// cycle in `ℝ² ∖ ℤ²`.
pub fn offset_polyline<R: Rng + ?Sized>(cycle: &GridCycle, rng: &mut R) -> Polyline {
    let eps = cycle.epsilon;
    let n = cycle.nodes.len();
    let push = |rng: &mut R, node: Node| {
        let radius = eps * rng.gen_range(1.5..3.0);
        let jitter = rng.gen_range(0.05..0.35) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        (radius, node.side.angle() + jitter)
    };
    let at = |node: Node, (radius, angle): (f64, f64)| {
        [node.x as f64 + radius * angle.cos(), node.y as f64 + radius * angle.sin()]
    };

    if cycle.is_trivial() {
        // A small loop beside the basepoint that crosses nothing.
        let node = cycle.basepoint();
        let centre = [node.x as f64 + 0.5, node.y as f64 + 0.5];
        let radius = rng.gen_range(0.1..0.3);
        let phase = rng.gen_range(0.0..1.0);
        let points = (0..12)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + phase) / 12.0;
                [centre[0] + radius * t.cos(), centre[1] + radius * t.sin()]
            })
            .collect();
        return Polyline::new(points);
    }

    let placements: Vec<(f64, f64)> = cycle.nodes.iter().map(|&node| push(rng, node)).collect();
    let mut points = Vec::new();
    for i in 0..n {
        let (from, to) = (cycle.nodes[i], cycle.nodes[(i + 1) % n]);
        let (r0, a0) = placements[i];
        points.push(at(from, (r0, a0)));
        if let Some(EdgeKind::Arc { ccw }) = edge_between(from, to) {
            let (r1, mut a1) = placements[(i + 1) % n];
            // Unwrap so the sweep runs a quarter turn in the walk's direction.
            let target = a0 + if ccw { FRAC_PI_2 } else { -FRAC_PI_2 };
            while a1 - target > PI {
                a1 -= 2.0 * PI;
            }
            while target - a1 > PI {
                a1 += 2.0 * PI;
            }
            const SAMPLES: usize = 8;
            for j in 1..SAMPLES {
                let t = j as f64 / SAMPLES as f64;
                points.push(at(from, (r0 + t * (r1 - r0), a0 + t * (a1 - a0))));
            }
        }
    }
    Polyline::new(points)
}

/// A square loop around the lattice point `(x, y)` through the centres of the
/// four surrounding cells, counterclockwise.
pub fn square_around(x: i64, y: i64) -> Polyline {
    let (cx, cy) = (x as f64, y as f64);
    Polyline::new(vec![[cx - 0.5, cy - 0.5], [cx + 0.5, cy - 0.5], [cx + 0.5, cy + 0.5], [cx - 0.5, cy + 0.5]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_closed_word, random_element_of_n};
    use crate::relator::conjugate_modulo_n;
    use crate::word::w;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> GridModel {
        GridModel::new(0.01).unwrap()
    }

    #[test]
    fn epsilon_range_is_enforced() {
        assert!(GridModel::new(0.0).is_err());
        assert!(GridModel::new(0.1).is_err());
        assert!(GridModel::new(0.05).is_ok());
    }

    #[test]
    fn generator_paths_match_reference_points() {
        let eps = 0.03;
        let close = |p: [f64; 2], q: [f64; 2]| dist(p, q) < 1e-12;
        // a = P1 E1 M P2 with P1 = (0,−ε), E1 = (−ε,0), M = (0,ε), P2 = (0,1−ε).
        let (a, _) = letter_path(Generator::A, false, 0, 0);
        assert!(close(a[0].position(eps), [-eps, 0.0]));
        assert!(close(a[1].position(eps), [0.0, eps]));
        assert!(close(a[2].position(eps), [0.0, 1.0 - eps]));
        // b = P1 L E2 P3 with L = (ε,0), E2 = (1−ε,0), P3 = (1,−ε).
        let (b, _) = letter_path(Generator::B, false, 0, 0);
        assert!(close(b[0].position(eps), [eps, 0.0]));
        assert!(close(b[1].position(eps), [1.0 - eps, 0.0]));
        assert!(close(b[2].position(eps), [1.0, -eps]));
        // c = P1 L M E1 P1.
        let (c, _) = letter_path(Generator::C, false, 0, 0);
        let expected = [[eps, 0.0], [0.0, eps], [-eps, 0.0], [0.0, -eps]];
        assert!(c.iter().zip(expected).all(|(n, p)| close(n.position(eps), p)));
    }

    #[test]
    fn letter_paths_are_walks_with_expected_displacement() {
        for letter in crate::word::Letter::ALL {
            let (nodes, (dx, dy)) = letter_path(letter.generator, letter.inverted, 0, 0);
            let mut prev = Node::new(0, 0, Side::South);
            for &node in &nodes {
                assert!(edge_between(prev, node).is_some(), "{letter}: {prev:?} -> {node:?}");
                prev = node;
            }
            assert_eq!(prev, Node::new(dx, dy, Side::South));
            assert_eq!(Word::from_letter(letter).abelianize_ab(), (dx, dy));
        }
    }

    #[test]
    fn edge_words_reproduce_generators() {
        for letter in crate::word::Letter::ALL {
            let (nodes, _) = letter_path(letter.generator, letter.inverted, 3, -2);
            let mut prev = Node::new(3, -2, Side::South);
            let mut pieces = Vec::new();
            for node in nodes {
                pieces.push(w(edge_word(prev, node).unwrap()));
                prev = node;
            }
            assert_eq!(Word::product(&pieces), Word::from_letter(letter));
        }
    }

    #[test]
    fn trivial_word_gives_trivial_cycle() {
        let cycle = word_to_cycle(&Word::identity(), &model()).unwrap();
        assert!(cycle.is_trivial());
        assert_eq!(cycle.length(), 0.0);
        assert_eq!(cycle_to_word(&cycle).unwrap(), Word::identity());
    }

    #[test]
    fn relator_bounds_a_cell() {
        let m = model();
        let cycle = word_to_cycle(&w("abABc"), &m).unwrap();
        assert_eq!(cycle.straight_count(), 4);
        assert_eq!(cycle.arc_count(), 4);
        assert!(cycle.is_geometrically_irreducible());
        assert!(cycle.length() >= 4.0 * m.straight_length());
        assert!(is_in_n(&cycle_to_word(&cycle).unwrap()));
    }

    #[test]
    fn commutator_cycle_length() {
        let m = model();
        let cycle = word_to_cycle(&w("abAB"), &m).unwrap();
        assert!(cycle.length() >= 4.0 * m.straight_length());
        assert!(cycle_to_word(&cycle).unwrap().is_rotation_of(&w("abAB")));
    }

    #[test]
    fn open_words_are_rejected() {
        assert!(matches!(word_to_cycle(&w("ab"), &model()), Err(GridError::NotClosed { .. })));
    }

    #[test]
    fn loop_around_lattice_point_reads_c() {
        let eps = 0.01;
        let nodes = Side::CCW.iter().map(|&s| Node::new(4, 7, s)).collect();
        let cycle = GridCycle { nodes, epsilon: eps };
        assert_eq!(cycle_to_word(&cycle).unwrap(), w("c"));
    }

    #[test]
    fn malformed_cycles_are_rejected() {
        let cycle =
            GridCycle { nodes: vec![Node::new(0, 0, Side::South), Node::new(0, 0, Side::North)], epsilon: 0.01 };
        assert!(matches!(cycle_to_word(&cycle), Err(GridError::MalformedCycle { .. })));
    }

    #[test]
    fn round_trip_on_random_closed_words() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let word = random_closed_word(&mut rng, 20);
            assert_eq!(word.abelianize_ab(), (0, 0));
            let cycle = word_to_cycle(&word, &m).unwrap();
            assert!(cycle.is_geometrically_irreducible());
            let back = cycle_to_word(&cycle).unwrap();
            assert!(back.is_rotation_of(&word), "{word} came back as {back}");
            assert!(m.straight_length() * word.ab_length() as f64 <= cycle.length() + 1e-12);
        }
    }

    #[test]
    fn square_around_lattice_point_is_four_corner_arcs() {
        let m = model();
        let (cycle, trace) = snap_to_grid(&square_around(1, 1), &m).unwrap();
        assert_eq!(trace.records.len(), 4);
        assert!(trace.records.iter().all(|r| r.case == SnapCase::AdjacentSides));
        assert!(cycle.nodes.iter().all(|n| (n.x, n.y) == (1, 1)));
        let word = cycle_to_word(&cycle).unwrap();
        assert!(word.is_conjugate_to(&w("c")));
        assert!(!is_in_n(&word));

        let cert = certify_curve(&square_around(1, 1), &m).unwrap();
        assert!(!cert.contractible);
        assert!(cert.area_bound.is_none());
    }

    #[test]
    fn loop_inside_one_cell_is_trivial() {
        let m = model();
        let circle = Polyline::new(
            (0..24)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / 24.0;
                    [0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin()]
                })
                .collect(),
        );
        let (cycle, _) = snap_to_grid(&circle, &m).unwrap();
        assert!(cycle.is_trivial());
        let cert = certify_curve(&circle, &m).unwrap();
        assert!(cert.contractible);
        assert_eq!(cert.d, Some(0));
        assert!(cert.area_bound.unwrap() <= cert.curve_length + 1e-12);
        assert!(cert.ratio.unwrap() < ISOPERIMETRIC_CONSTANT);
    }

    #[test]
    fn opposite_sides_take_the_shorter_route() {
        let m = model();
        // A thin horizontal band crossing x = 1 and x = 2 near y = 0.2: the
        // piece inside [1,2]×[0,1] goes left to right and should follow the
        // bottom side.
        let curve = Polyline::new(vec![[0.5, 0.2], [2.5, 0.2], [2.5, 0.3], [0.5, 0.3]]);
        let (_, trace) = snap_to_grid(&curve, &m).unwrap();
        let opposite: Vec<_> = trace.records.iter().filter(|r| r.case == SnapCase::OppositeSides).collect();
        assert_eq!(opposite.len(), 2);
        for r in opposite {
            assert!(r.path_length <= 2.0);
            assert!(r.path_length < 1.0 + 0.6);
        }
        assert!(trace.records.iter().all(SnapRecord::within_bounds));
    }

    #[test]
    fn forbidden_zone_and_general_position() {
        let m = model();
        let through = Polyline::new(vec![[0.5, 0.005], [1.5, 0.005], [1.5, 0.5]]);
        assert!(matches!(snap_to_grid(&through, &m), Err(GridError::InsideForbiddenZone { .. })));
        let on_line = Polyline::new(vec![[1.0, 0.5], [1.5, 0.5], [1.5, 0.7]]);
        assert!(matches!(snap_to_grid(&on_line, &m), Err(GridError::NotGeneralPosition { .. })));
        let at_vertex = Polyline::new(vec![[0.5, 0.01], [1.5, 0.01], [1.5, 0.5]]);
        assert!(snap_to_grid(&at_vertex, &m).is_err());
        assert!(matches!(snap_to_grid(&Polyline::new(vec![[0.5, 0.5]]), &m), Err(GridError::DegenerateCurve)));
    }

    #[test]
    fn offset_cycles_snap_back_to_their_word() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..40u64 {
            let word = if seed % 2 == 0 {
                random_element_of_n(seed, 2, 2).cyclic_reduce().core
            } else {
                random_closed_word(&mut rng, 12)
            };
            let cycle = word_to_cycle(&word, &m).unwrap();
            let curve = offset_polyline(&cycle, &mut rng);
            let (snapped, trace) = snap_to_grid(&curve, &m).unwrap();
            let back = cycle_to_word(&snapped).unwrap();
            // Opposite-side pieces take the shorter route, which may swap a
            // hugged cell boundary for the other side: the word can change
            // by relators, never its free homotopy class.
            assert!(conjugate_modulo_n(&back, &word), "{word} snapped to {back}");
            assert!(snapped.length() <= 2.0 * curve.length());
            assert!(trace.homotopy_area() <= SQRT_2 * curve.length() + 1e-9);
        }
    }

    #[test]
    fn small_perturbations_preserve_the_class() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let word = w("abABcabABc");
        let cycle = word_to_cycle(&word, &m).unwrap();
        let curve = offset_polyline(&cycle, &mut rng);
        let nudged = Polyline::new(
            curve
                .points
                .iter()
                .map(|p| [p[0] + rng.gen_range(-1e-5..1e-5), p[1] + rng.gen_range(-1e-5..1e-5)])
                .collect(),
        );
        let w1 = cycle_to_word(&snap_to_grid(&curve, &m).unwrap().0).unwrap();
        let w2 = cycle_to_word(&snap_to_grid(&nudged, &m).unwrap().0).unwrap();
        assert!(w1.is_conjugate_to(&w2));
    }

    #[test]
    fn translation_invariance() {
        let m = model();
        let cycle = word_to_cycle(&w("aabAABcc"), &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let curve = offset_polyline(&cycle, &mut rng);
        let shifted = curve.translated(3.0, -5.0);
        let w1 = cycle_to_word(&snap_to_grid(&curve, &m).unwrap().0).unwrap();
        let w2 = cycle_to_word(&snap_to_grid(&shifted, &m).unwrap().0).unwrap();
        assert!(w1.is_conjugate_to(&w2));
    }
}
