//! Footprint ingestion, neighborhood assembly, splits, and synthetic cities.
//!
//! Buildings arrive as line-delimited JSON: a header object
//! `{"format":"blockgen-buildings","version":1}` followed by one record per
//! line with an id, a footprint polygon, and an optional height. Every anchor
//! building and its nearest neighbors (anchor included) become one
//! frame-normalized [`LayoutSet`]; a seeded shuffle assigns sets to
//! train/val/test. `synth_city` fabricates a jittered grid town so the whole
//! pipeline can run without survey data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest_io::{parse, parse_floats, Lines};
use crate::geometry::{min_bounding_rect, polygon_area, Cuboid};
use crate::tree::{normalize_frame, LayoutSet};

/// Neighborhood size used when none is configured.
pub const DEFAULT_NEIGHBORS: usize = 32;
/// Train/val/test proportions used when none are configured.
pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];
/// Footprints below this area are reported and skipped, not boxed.
pub const DEGENERATE_AREA: f64 = 1e-12;

const BUILDINGS_FORMAT: &str = "blockgen-buildings";
const BUILDINGS_VERSION: u32 = 1;
const MANIFEST_HEADER: &str = "# blockgen manifest v1";

/// One building: a simple-polygon footprint plus an optional height.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BuildingRecord {
    pub id: String,
    /// Polygon vertices in scene units, at least three, non-self-intersecting.
    pub footprint: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub height: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingsHeader {
    format: String,
    version: u32,
}

impl BuildingRecord {
    pub fn new(id: impl Into<String>, footprint: Vec<[f64; 2]>, height: Option<f64>) -> Result<Self> {
        let record = BuildingRecord {
            id: id.into(),
            footprint,
            height,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(Error::invalid(format!(
                "building id {:?} must be a non-empty whitespace-free token",
                self.id
            )));
        }
        if self.footprint.len() < 3 {
            return Err(Error::invalid(format!(
                "building {}: footprint has {} vertices, need at least 3",
                self.id,
                self.footprint.len()
            )));
        }
        for [x, y] in &self.footprint {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid(format!(
                    "building {}: non-finite footprint vertex ({x}, {y})",
                    self.id
                )));
            }
        }
        if let Some(h) = self.height {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::invalid(format!(
                    "building {}: height {h} must be finite and nonnegative",
                    self.id
                )));
            }
        }
        if let Some((i, j)) = first_edge_crossing(&self.footprint) {
            return Err(Error::invalid(format!(
                "building {}: footprint edges {i} and {j} cross, polygon must be simple",
                self.id
            )));
        }
        Ok(())
    }

    /// Vertex mean; the point neighbor distances are measured from.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.footprint.len() as f64;
        let (sx, sy) = self
            .footprint
            .iter()
            .fold((0.0, 0.0), |(sx, sy), [x, y]| (sx + x, sy + y));
        [sx / n, sy / n]
    }
}

/// Indices of the first pair of properly crossing non-adjacent edges.
fn first_edge_crossing(poly: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = poly.len();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    for i in 0..n {
        for j in (i + 1)..n {
            // Edges sharing a vertex (neighbors, including the wrap-around
            // pair) meet by construction and are not crossings.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (p1, p2) = (poly[i], poly[(i + 1) % n]);
            let (q1, q2) = (poly[j], poly[(j + 1) % n]);
            let d1 = cross(q1, q2, p1);
            let d2 = cross(q1, q2, p2);
            let d3 = cross(p1, p2, q1);
            let d4 = cross(p1, p2, q2);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

pub fn write_buildings(path: impl AsRef<Path>, records: &[BuildingRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = BuildingsHeader {
        format: BUILDINGS_FORMAT.into(),
        version: BUILDINGS_VERSION,
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for record in records {
        record.validate()?;
        writeln!(
            out,
            "{}",
            serde_json::to_string(record).expect("record serializes")
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_buildings(path: impl AsRef<Path>) -> Result<Vec<BuildingRecord>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut records = Vec::new();
    let mut seen_header = false;
    let mut line_no = 0;
    for line in reader.lines() {
        line_no += 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            let header: BuildingsHeader = serde_json::from_str(&line)
                .map_err(|e| Error::schema(line_no, format!("bad header object: {e}")))?;
            if header.format != BUILDINGS_FORMAT || header.version != BUILDINGS_VERSION {
                return Err(Error::schema(
                    line_no,
                    format!(
                        "expected format {BUILDINGS_FORMAT:?} version {BUILDINGS_VERSION}, got {:?} version {}",
                        header.format, header.version
                    ),
                ));
            }
            seen_header = true;
            continue;
        }
        let record: BuildingRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(line_no, format!("bad building record: {e}")))?;
        record
            .validate()
            .map_err(|e| Error::schema(line_no, e.to_string()))?;
        if records.iter().any(|r: &BuildingRecord| r.id == record.id) {
            return Err(Error::schema(
                line_no,
                format!("duplicate building id {:?}", record.id),
            ));
        }
        records.push(record);
    }
    if !seen_header {
        return Err(Error::schema(1, "empty file, expected a buildings header object"));
    }
    Ok(records)
}

/// Minimum bounding rectangle of the footprint as a box; `None` flags a
/// degenerate (near-zero-area) footprint the caller should skip and report.
/// A missing height yields `h = 0`, the flat 2D case.
pub fn footprint_to_cuboid(record: &BuildingRecord) -> Result<Option<Cuboid>> {
    record.validate()?;
    if polygon_area(&record.footprint).abs() < DEGENERATE_AREA {
        return Ok(None);
    }
    let rect = min_bounding_rect(&record.footprint)?;
    Ok(Some(Cuboid {
        h: record.height.unwrap_or(0.0),
        ..rect
    }))
}

/// `build_layout_sets` output: one set per non-degenerate anchor, plus the
/// ids whose footprints were too small to box.
#[derive(Debug, Clone)]
pub struct LayoutAssembly {
    pub sets: Vec<LayoutSet>,
    pub skipped: Vec<String>,
}

/// One frame-normalized set per anchor: the anchor and its `k - 1` nearest
/// valid neighbors by centroid distance (so the anchor is one of its own
/// `k`), ties broken by id. Set and member order are deterministic.
pub fn build_layout_sets(buildings: &[BuildingRecord], k: usize) -> Result<LayoutAssembly> {
    if k < 2 {
        return Err(Error::invalid(format!("neighborhood size {k} must be at least 2")));
    }
    for (i, a) in buildings.iter().enumerate() {
        for b in &buildings[i + 1..] {
            if a.id == b.id {
                return Err(Error::invalid(format!("duplicate building id {:?}", a.id)));
            }
        }
    }
    let mut skipped = Vec::new();
    let mut valid: Vec<(&BuildingRecord, Cuboid, [f64; 2])> = Vec::new();
    for record in buildings {
        match footprint_to_cuboid(record)? {
            Some(cuboid) => valid.push((record, cuboid, record.centroid())),
            None => skipped.push(record.id.clone()),
        }
    }
    if valid.len() < k {
        return Err(Error::invalid(format!(
            "{} usable buildings cannot fill {k}-building sets",
            valid.len()
        )));
    }
    let mut sets = Vec::with_capacity(valid.len());
    for (anchor, _, ac) in &valid {
        let mut order: Vec<usize> = (0..valid.len()).collect();
        let dist = |i: usize| {
            let c = valid[i].2;
            let (dx, dy) = (c[0] - ac[0], c[1] - ac[1]);
            (dx * dx + dy * dy).sqrt()
        };
        order.sort_by(|a, b| {
            dist(*a)
                .partial_cmp(&dist(*b))
                .unwrap()
                .then_with(|| valid[*a].0.id.cmp(&valid[*b].0.id))
        });
        let cuboids: Vec<Cuboid> = order[..k].iter().map(|i| valid[*i].1).collect();
        let set = LayoutSet::new(anchor.id.clone(), cuboids)?;
        sets.push(normalize_frame(&set)?);
    }
    Ok(LayoutAssembly { sets, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split {other:?}"))),
        }
    }
}

/// Which set went where, plus everything needed to reproduce the draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub ratios: [f64; 3],
    /// Free-form provenance line; internal whitespace is collapsed on read.
    pub notes: String,
    /// `(set id, split)` in assignment order; ids are unique.
    pub assignments: Vec<(String, Split)>,
}

impl DatasetManifest {
    pub fn ids(&self, split: Split) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, s)| *s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.assignments
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, s)| *s)
    }
}

/// Largest-remainder apportionment of `n` into three parts.
fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut fracs = [(0.0f64, 0usize); 3];
    let mut used = 0;
    for i in 0..3 {
        let exact = n as f64 * ratios[i];
        let floor = exact.floor() as usize;
        sizes[i] = floor;
        used += floor;
        fracs[i] = (exact - floor as f64, i);
    }
    // Leftover slots go to the largest fractional parts, earlier split first.
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for (_, i) in fracs.iter().take(n - used) {
        sizes[*i] += 1;
    }
    sizes
}

/// Shuffle the set ids with the seed, then slice the order contiguously into
/// train/val/test blocks sized by largest-remainder rounding.
pub fn split(sets: &[LayoutSet], ratios: [f64; 3], seed: u64) -> Result<DatasetManifest> {
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios {ratios:?} must be nonnegative and sum to 1"
        )));
    }
    let mut ids: Vec<String> = sets.iter().map(|s| s.id.clone()).collect();
    use rand::seq::SliceRandom;
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let sizes = split_sizes(ids.len(), ratios);
    let mut assignments = Vec::with_capacity(ids.len());
    let mut cursor = ids.into_iter();
    for (size, split) in sizes.into_iter().zip(Split::ALL) {
        for _ in 0..size {
            assignments.push((cursor.next().expect("sizes sum to the id count"), split));
        }
    }
    Ok(DatasetManifest {
        seed,
        ratios,
        notes: String::new(),
        assignments,
    })
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    if manifest.notes.contains(['\n', '\r']) {
        return Err(Error::invalid("manifest notes must be a single line"));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{MANIFEST_HEADER}")?;
    writeln!(out, "seed {}", manifest.seed)?;
    writeln!(
        out,
        "ratios {} {} {}",
        manifest.ratios[0], manifest.ratios[1], manifest.ratios[2]
    )?;
    writeln!(out, "notes {}", manifest.notes)?;
    for (id, split) in &manifest.assignments {
        if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(Error::invalid(format!(
                "set id {id:?} must be a non-empty whitespace-free token"
            )));
        }
        writeln!(out, "assign {id} {split}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let mut lines = Lines::open(path.as_ref())?;
    lines.expect_header(MANIFEST_HEADER)?;
    let fields = lines
        .next_fields()?
        .ok_or_else(|| Error::schema(lines.number + 1, "missing \"seed\" line"))?;
    if fields[0] != "seed" || fields.len() != 2 {
        return Err(Error::schema(lines.number, "expected `seed <value>`"));
    }
    let seed: u64 = parse(lines.number, &fields[1])?;
    let fields = lines
        .next_fields()?
        .ok_or_else(|| Error::schema(lines.number + 1, "missing \"ratios\" line"))?;
    if fields[0] != "ratios" || fields.len() != 4 {
        return Err(Error::schema(lines.number, "expected `ratios <train> <val> <test>`"));
    }
    let ratios = parse_floats::<3>(lines.number, &fields[1..4])?;
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| *r < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::schema(
            lines.number,
            format!("ratios {ratios:?} must be nonnegative and sum to 1"),
        ));
    }
    let fields = lines
        .next_fields()?
        .ok_or_else(|| Error::schema(lines.number + 1, "missing \"notes\" line"))?;
    if fields[0] != "notes" {
        return Err(Error::schema(lines.number, "expected `notes <text>`"));
    }
    let notes = fields[1..].join(" ");
    let mut assignments: Vec<(String, Split)> = Vec::new();
    while let Some(fields) = lines.next_fields()? {
        if fields[0] != "assign" || fields.len() != 3 {
            return Err(Error::schema(lines.number, "expected `assign <id> <split>`"));
        }
        let id = fields[1].clone();
        if assignments.iter().any(|(existing, _)| *existing == id) {
            return Err(Error::schema(lines.number, format!("duplicate set id {id:?}")));
        }
        let split: Split = parse(lines.number, &fields[2])?;
        assignments.push((id, split));
    }
    Ok(DatasetManifest {
        seed,
        ratios,
        notes,
        assignments,
    })
}

/// A rows x cols grid town of rectangular buildings at unit spacing. Base
/// footprints are 0.6 x 0.4 so the grid is pairwise disjoint at zero jitter;
/// `jitter` scales seeded perturbations of position, size, rotation, and
/// height. Ids are `b0000`, `b0001`, ... in row-major order.
pub fn synth_city(rows: usize, cols: usize, jitter: f64, seed: u64) -> Result<Vec<BuildingRecord>> {
    if rows * cols < 2 {
        return Err(Error::invalid(format!(
            "synthetic city needs at least 2 buildings, got {rows} x {cols}"
        )));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::invalid(format!("jitter {jitter} must be finite and nonnegative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = c as f64 + jitter * rng.gen_range(-0.2..0.2);
            let y = r as f64 + jitter * rng.gen_range(-0.2..0.2);
            let l = 0.6 * (1.0 + jitter * rng.gen_range(-0.3..0.3));
            let w = 0.4 * (1.0 + jitter * rng.gen_range(-0.3..0.3));
            let a = jitter * rng.gen_range(-0.35..0.35);
            let height = 1.0 + jitter * rng.gen_range(0.0..1.0);
            let footprint = Cuboid::new(x, y, l, w, 0.0, a)?
                .footprint_corners()
                .to_vec();
            records.push(BuildingRecord::new(
                format!("b{:04}", r * cols + c),
                footprint,
                Some(height),
            )?);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::oar;
    use std::fs;

    fn square(cx: f64, cy: f64, half: f64) -> Vec<[f64; 2]> {
        vec![
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    }

    #[test]
    fn rectangular_footprint_boxes_to_itself() {
        let record = BuildingRecord::new(
            "r1",
            vec![[1.0, 2.0], [5.0, 2.0], [5.0, 4.0], [1.0, 4.0]],
            Some(7.5),
        )
        .unwrap();
        let cuboid = footprint_to_cuboid(&record).unwrap().unwrap();
        assert!((cuboid.x - 3.0).abs() < 1e-12);
        assert!((cuboid.y - 3.0).abs() < 1e-12);
        assert!((cuboid.l - 4.0).abs() < 1e-12);
        assert!((cuboid.w - 2.0).abs() < 1e-12);
        assert!(cuboid.a.abs() < 1e-12);
        assert_eq!(cuboid.h, 7.5);
    }

    #[test]
    fn l_shaped_footprint_boxes_to_its_bounding_rectangle() {
        let footprint = vec![
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ];
        let poly_area = polygon_area(&footprint);
        let record = BuildingRecord::new("ell", footprint, None).unwrap();
        let cuboid = footprint_to_cuboid(&record).unwrap().unwrap();
        assert!(cuboid.area() >= poly_area);
        assert!((cuboid.l - 3.0).abs() < 1e-9);
        assert!((cuboid.w - 2.0).abs() < 1e-9);
        assert_eq!(cuboid.h, 0.0, "missing height means the flat 2D case");
    }

    #[test]
    fn degenerate_footprints_are_skip_signals() {
        let record = BuildingRecord::new(
            "flat",
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            Some(3.0),
        )
        .unwrap();
        assert_eq!(footprint_to_cuboid(&record).unwrap(), None);
    }

    #[test]
    fn records_reject_bad_shapes() {
        assert!(BuildingRecord::new("a", vec![[0.0, 0.0], [1.0, 0.0]], None).is_err());
        assert!(BuildingRecord::new("has space", square(0.0, 0.0, 1.0), None).is_err());
        assert!(BuildingRecord::new("a", square(0.0, 0.0, 1.0), Some(-1.0)).is_err());
        assert!(BuildingRecord::new("a", square(0.0, 0.0, 1.0), Some(f64::NAN)).is_err());
        // A bowtie: edges 0 and 2 cross.
        let bowtie = vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        let err = BuildingRecord::new("bow", bowtie, None).unwrap_err();
        assert!(err.to_string().contains("simple"), "{err}");
    }

    #[test]
    fn buildings_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("city.jsonl");
        let records = synth_city(3, 4, 0.8, 17).unwrap();
        write_buildings(&path, &records).unwrap();
        let back = read_buildings(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.height.map(f64::to_bits), b.height.map(f64::to_bits));
            assert_eq!(a.footprint.len(), b.footprint.len());
            for (p, q) in a.footprint.iter().zip(&b.footprint) {
                assert_eq!(p[0].to_bits(), q[0].to_bits());
                assert_eq!(p[1].to_bits(), q[1].to_bits());
            }
        }
    }

    #[test]
    fn ingest_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "").unwrap();
        assert!(matches!(read_buildings(&path), Err(Error::Schema { line: 1, .. })));

        fs::write(&path, "{\"format\":\"blockgen-buildings\",\"version\":9}\n").unwrap();
        assert!(matches!(read_buildings(&path), Err(Error::Schema { line: 1, .. })));

        let header = "{\"format\":\"blockgen-buildings\",\"version\":1}\n";
        fs::write(&path, format!("{header}{{\"id\":\"a\"}}\n")).unwrap();
        assert!(matches!(read_buildings(&path), Err(Error::Schema { line: 2, .. })));

        let two_vertex =
            format!("{header}{{\"id\":\"a\",\"footprint\":[[0,0],[1,0]]}}\n");
        fs::write(&path, two_vertex).unwrap();
        assert!(matches!(read_buildings(&path), Err(Error::Schema { line: 2, .. })));

        let good = "{\"id\":\"a\",\"footprint\":[[0,0],[1,0],[1,1]]}";
        fs::write(&path, format!("{header}{good}\n{good}\n")).unwrap();
        match read_buildings(&path) {
            Err(Error::Schema { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate"), "{msg}");
            }
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }

    #[test]
    fn every_set_has_k_members_with_the_anchor_first() {
        let records = synth_city(5, 6, 0.4, 3).unwrap();
        let k = 7;
        let assembly = build_layout_sets(&records, k).unwrap();
        assert_eq!(assembly.sets.len(), records.len());
        assert!(assembly.skipped.is_empty());
        for (record, set) in records.iter().zip(&assembly.sets) {
            assert_eq!(set.id, record.id);
            assert_eq!(set.cuboids.len(), k);
            // The anchor is distance zero from itself, so it leads the set.
            let anchor = footprint_to_cuboid(record).unwrap().unwrap();
            let lead = &set.cuboids[0];
            let expect_x = (anchor.x - set.frame.cx) / set.frame.scale;
            let expect_y = (anchor.y - set.frame.cy) / set.frame.scale;
            assert!((lead.x - expect_x).abs() < 1e-12);
            assert!((lead.y - expect_y).abs() < 1e-12);
        }
    }

    #[test]
    fn layout_sets_match_a_brute_force_neighbor_oracle() {
        let records = synth_city(6, 7, 0.6, 11).unwrap();
        let k = 5;
        let assembly = build_layout_sets(&records, k).unwrap();
        let centroids: Vec<[f64; 2]> = records.iter().map(|r| r.centroid()).collect();
        for (i, set) in assembly.sets.iter().enumerate() {
            let mut order: Vec<usize> = (0..records.len()).collect();
            order.sort_by(|a, b| {
                let d = |j: usize| {
                    let (dx, dy) = (
                        centroids[j][0] - centroids[i][0],
                        centroids[j][1] - centroids[i][1],
                    );
                    (dx * dx + dy * dy).sqrt()
                };
                d(*a).partial_cmp(&d(*b)).unwrap().then(records[*a].id.cmp(&records[*b].id))
            });
            let expected: Vec<Cuboid> = order[..k]
                .iter()
                .map(|j| footprint_to_cuboid(&records[*j]).unwrap().unwrap())
                .collect();
            let oracle = normalize_frame(&LayoutSet::new(set.id.clone(), expected).unwrap()).unwrap();
            for (a, b) in set.cuboids.iter().zip(&oracle.cuboids) {
                assert_eq!(a.x.to_bits(), b.x.to_bits());
                assert_eq!(a.y.to_bits(), b.y.to_bits());
                assert_eq!(a.l.to_bits(), b.l.to_bits());
            }
        }
    }

    #[test]
    fn with_exactly_k_buildings_every_set_shares_membership() {
        let records = synth_city(2, 3, 0.5, 5).unwrap();
        let assembly = build_layout_sets(&records, records.len()).unwrap();
        assert_eq!(assembly.sets.len(), 6);
        for set in &assembly.sets[1..] {
            // Same members in possibly different order: compare sorted areas.
            let mut a: Vec<f64> = assembly.sets[0].cuboids.iter().map(Cuboid::area).collect();
            let mut b: Vec<f64> = set.cuboids.iter().map(Cuboid::area).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_few_buildings_are_rejected_and_degenerates_skipped() {
        let mut records = synth_city(2, 2, 0.0, 0).unwrap();
        assert!(build_layout_sets(&records, 5).is_err());
        records.push(
            BuildingRecord::new("flat", vec![[9.0, 9.0], [10.0, 9.0], [11.0, 9.0]], None).unwrap(),
        );
        let assembly = build_layout_sets(&records, 4).unwrap();
        assert_eq!(assembly.skipped, vec!["flat".to_string()]);
        assert_eq!(assembly.sets.len(), 4, "degenerate anchors get no set");
    }

    #[test]
    fn jitter_free_city_sets_never_overlap() {
        let records = synth_city(4, 4, 0.0, 9).unwrap();
        let assembly = build_layout_sets(&records, 6).unwrap();
        for set in &assembly.sets {
            assert_eq!(oar(&set.cuboids).unwrap(), 0.0);
        }
    }

    #[test]
    fn synthetic_city_is_seed_deterministic() {
        let a = synth_city(8, 8, 0.3, 21).unwrap();
        let b = synth_city(8, 8, 0.3, 21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        let c = synth_city(8, 8, 0.3, 22).unwrap();
        assert_ne!(a, c);
        assert!(synth_city(1, 1, 0.0, 0).is_err());
        assert!(synth_city(2, 2, -0.5, 0).is_err());
        // 8x8 with the default neighborhood: one set per anchor.
        let assembly = build_layout_sets(&a, DEFAULT_NEIGHBORS).unwrap();
        assert_eq!(assembly.sets.len(), 64);
    }

    #[test]
    fn ten_sets_split_seven_one_two() {
        let records = synth_city(2, 5, 0.2, 1).unwrap();
        let assembly = build_layout_sets(&records, 3).unwrap();
        let manifest = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 42).unwrap();
        assert_eq!(manifest.ids(Split::Train).len(), 7);
        assert_eq!(manifest.ids(Split::Val).len(), 1);
        assert_eq!(manifest.ids(Split::Test).len(), 2);
    }

    #[test]
    fn sixty_four_sets_split_45_6_13() {
        let records = synth_city(8, 8, 0.1, 2).unwrap();
        let assembly = build_layout_sets(&records, DEFAULT_NEIGHBORS).unwrap();
        let manifest = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 0).unwrap();
        assert_eq!(manifest.ids(Split::Train).len(), 45);
        assert_eq!(manifest.ids(Split::Val).len(), 6);
        assert_eq!(manifest.ids(Split::Test).len(), 13);
    }

    #[test]
    fn split_is_deterministic_disjoint_and_covering() {
        let records = synth_city(3, 5, 0.4, 7).unwrap();
        let assembly = build_layout_sets(&records, 4).unwrap();
        let a = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 5).unwrap();
        let b = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 5).unwrap();
        assert_eq!(a, b);
        let c = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 6).unwrap();
        assert_ne!(a.assignments, c.assignments);
        let mut ids: Vec<&str> = a.assignments.iter().map(|(id, _)| id.as_str()).collect();
        ids.sort();
        let mut want: Vec<&str> = assembly.sets.iter().map(|s| s.id.as_str()).collect();
        want.sort();
        assert_eq!(ids, want, "every set lands in exactly one split");
        assert!(split(&assembly.sets, [0.5, 0.2, 0.2], 0).is_err());
        assert!(split(&assembly.sets, [1.2, -0.1, -0.1], 0).is_err());
    }

    #[test]
    fn manifest_round_trips_and_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        let records = synth_city(2, 4, 0.3, 13).unwrap();
        let assembly = build_layout_sets(&records, 3).unwrap();
        let mut manifest = split(&assembly.sets, DEFAULT_SPLIT_RATIOS, 99).unwrap();
        manifest.notes = "synthetic grid 2x4 jitter 0.3".into();
        write_manifest(&path, &manifest).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, manifest);

        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("manifest v1", "manifest v2")).unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Schema { line: 1, .. })));
        fs::write(&path, text.replace(" train", " training")).unwrap();
        assert!(read_manifest(&path).is_err());
        let dup = format!("{text}assign {} train\n", manifest.assignments[0].0);
        fs::write(&path, dup).unwrap();
        assert!(read_manifest(&path).is_err(), "duplicate assignment must fail");
    }
}
