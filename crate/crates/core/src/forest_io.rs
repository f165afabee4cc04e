//! Line-oriented text formats for layout sets and tree forests.
//!
//! Both files open with a versioned header line. Floats are printed with
//! Rust's shortest round-trip formatting, so write-then-read reproduces every
//! value bit for bit. Set ids are whitespace-free tokens; the writer rejects
//! anything else up front.
//!
//! Layout sets (`# blockgen layout-sets v1`):
//! ```text
//! set <id> <count> <frame_cx> <frame_cy> <frame_scale>
//! cuboid <x> <y> <l> <w> <h> <a>     (count lines)
//! ```
//!
//! Forest (`# blockgen forest v1`), node index = position, parent `-1` on
//! the root, one `node` line per tree node then the level-grouped merge rows:
//! ```text
//! tree <id> <node_count> <root> <frame_cx> <frame_cy> <frame_scale>
//! node <x> <y> <l> <w> <h> <a> <rx> <ry> <rl> <rw> <rh> <ra> <leaf> <parent>
//! levels <height>
//! level <k> <row_count>
//! row <left> <right> <parent>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Cuboid;
use crate::tree::{Frame, IndexMatrix, LayoutSet, RelParams, SpatialTree, TreeNode};

const SETS_HEADER: &str = "# blockgen layout-sets v1";
const FOREST_HEADER: &str = "# blockgen forest v1";

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(Error::invalid(format!(
            "set id {id:?} must be a non-empty whitespace-free token"
        )));
    }
    Ok(())
}

pub fn write_layout_sets(path: impl AsRef<Path>, sets: &[LayoutSet]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SETS_HEADER}")?;
    for set in sets {
        check_id(&set.id)?;
        writeln!(
            out,
            "set {} {} {} {} {}",
            set.id,
            set.cuboids.len(),
            set.frame.cx,
            set.frame.cy,
            set.frame.scale
        )?;
        for c in &set.cuboids {
            writeln!(out, "cuboid {} {} {} {} {} {}", c.x, c.y, c.l, c.w, c.h, c.a)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_layout_sets(path: impl AsRef<Path>) -> Result<Vec<LayoutSet>> {
    let mut lines = Lines::open(path.as_ref())?;
    lines.expect_header(SETS_HEADER)?;
    let mut sets = Vec::new();
    while let Some(fields) = lines.next_fields()? {
        let set_line = lines.number;
        if fields[0] != "set" || fields.len() != 6 {
            return Err(Error::schema(
                set_line,
                "expected `set <id> <count> <cx> <cy> <scale>`",
            ));
        }
        let id = fields[1].clone();
        check_id(&id).map_err(|e| Error::schema(set_line, e.to_string()))?;
        let count: usize = parse(set_line, &fields[2])?;
        let frame = parse_frame(set_line, &fields[3..6])?;
        let mut cuboids = Vec::with_capacity(count);
        for _ in 0..count {
            let fields = lines
                .next_fields()?
                .ok_or_else(|| Error::schema(lines.number + 1, "missing cuboid line"))?;
            let line = lines.number;
            if fields[0] != "cuboid" || fields.len() != 7 {
                return Err(Error::schema(line, "expected `cuboid` with 6 numbers"));
            }
            let v = parse_floats::<6>(line, &fields[1..7])?;
            cuboids.push(
                Cuboid::new(v[0], v[1], v[2], v[3], v[4], v[5])
                    .map_err(|e| Error::schema(line, e.to_string()))?,
            );
        }
        let mut set =
            LayoutSet::new(id, cuboids).map_err(|e| Error::schema(set_line, e.to_string()))?;
        set.frame = frame;
        sets.push(set);
    }
    Ok(sets)
}

pub fn write_forest(path: impl AsRef<Path>, trees: &[SpatialTree]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{FOREST_HEADER}")?;
    for tree in trees {
        check_id(&tree.id)?;
        writeln!(
            out,
            "tree {} {} {} {} {} {}",
            tree.id,
            tree.nodes.len(),
            tree.root,
            tree.frame.cx,
            tree.frame.cy,
            tree.frame.scale
        )?;
        for node in &tree.nodes {
            let c = &node.cuboid;
            let r = &node.relative;
            let parent = node.parent.map_or(-1, |p| p as i64);
            writeln!(
                out,
                "node {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
                c.x,
                c.y,
                c.l,
                c.w,
                c.h,
                c.a,
                r.x,
                r.y,
                r.l,
                r.w,
                r.h,
                r.a,
                u8::from(node.is_leaf),
                parent
            )?;
        }
        writeln!(out, "levels {}", tree.levels.len())?;
        for (k, level) in tree.levels.iter().enumerate() {
            writeln!(out, "level {} {}", k, level.rows.len())?;
            for [l, r, p] in &level.rows {
                writeln!(out, "row {l} {r} {p}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_forest(path: impl AsRef<Path>) -> Result<Vec<SpatialTree>> {
    let mut lines = Lines::open(path.as_ref())?;
    lines.expect_header(FOREST_HEADER)?;
    let mut trees = Vec::new();
    while let Some(fields) = lines.next_fields()? {
        let tree_line = lines.number;
        if fields[0] != "tree" || fields.len() != 7 {
            return Err(Error::schema(
                tree_line,
                "expected `tree <id> <nodes> <root> <cx> <cy> <scale>`",
            ));
        }
        let id = fields[1].clone();
        check_id(&id).map_err(|e| Error::schema(tree_line, e.to_string()))?;
        let node_count: usize = parse(tree_line, &fields[2])?;
        let root: usize = parse(tree_line, &fields[3])?;
        let frame = parse_frame(tree_line, &fields[4..7])?;

        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let fields = lines
                .next_fields()?
                .ok_or_else(|| Error::schema(lines.number + 1, "missing node line"))?;
            let line = lines.number;
            if fields[0] != "node" || fields.len() != 15 {
                return Err(Error::schema(line, "expected `node` with 14 fields"));
            }
            let v = parse_floats::<12>(line, &fields[1..13])?;
            let cuboid = Cuboid::new(v[0], v[1], v[2], v[3], v[4], v[5])
                .map_err(|e| Error::schema(line, e.to_string()))?;
            let relative = RelParams::from_array([v[6], v[7], v[8], v[9], v[10], v[11]]);
            let is_leaf = match fields[13].as_str() {
                "0" => false,
                "1" => true,
                other => return Err(Error::schema(line, format!("leaf flag {other:?}"))),
            };
            let parent: i64 = parse(line, &fields[14])?;
            let parent = if parent < 0 {
                None
            } else {
                Some(parent as usize)
            };
            nodes.push(TreeNode {
                cuboid,
                relative,
                is_leaf,
                parent,
                children: None,
                level: 0,
            });
        }

        let fields = lines
            .next_fields()?
            .ok_or_else(|| Error::schema(lines.number + 1, "missing levels line"))?;
        let levels_line = lines.number;
        if fields[0] != "levels" || fields.len() != 2 {
            return Err(Error::schema(levels_line, "expected `levels <height>`"));
        }
        let height: usize = parse(levels_line, &fields[1])?;
        let mut levels = Vec::with_capacity(height);
        for k in 0..height {
            let fields = lines
                .next_fields()?
                .ok_or_else(|| Error::schema(lines.number + 1, "missing level line"))?;
            let line = lines.number;
            if fields[0] != "level" || fields.len() != 3 {
                return Err(Error::schema(line, "expected `level <k> <rows>`"));
            }
            if parse::<usize>(line, &fields[1])? != k {
                return Err(Error::schema(line, format!("expected level {k}")));
            }
            let row_count: usize = parse(line, &fields[2])?;
            let mut rows = Vec::with_capacity(row_count);
            for _ in 0..row_count {
                let fields = lines
                    .next_fields()?
                    .ok_or_else(|| Error::schema(lines.number + 1, "missing row line"))?;
                let line = lines.number;
                if fields[0] != "row" || fields.len() != 4 {
                    return Err(Error::schema(
                        line,
                        "expected `row <left> <right> <parent>`",
                    ));
                }
                rows.push([
                    parse(line, &fields[1])?,
                    parse(line, &fields[2])?,
                    parse(line, &fields[3])?,
                ]);
            }
            levels.push(IndexMatrix { rows });
        }
        let end_line = lines.number;

        // Children and levels are derived from the merge rows, then the whole
        // structure goes through the validator before anything trusts it.
        for level in &levels {
            for &[l, r, p] in &level.rows {
                if p >= nodes.len() || l >= nodes.len() || r >= nodes.len() {
                    return Err(Error::schema(end_line, "row index out of range"));
                }
                nodes[p].children = Some([l, r]);
            }
        }
        for level in &levels {
            for &[l, r, p] in &level.rows {
                nodes[p].level = 1 + nodes[l].level.max(nodes[r].level);
            }
        }
        let tree = SpatialTree {
            id,
            frame,
            nodes,
            levels,
            root,
        };
        tree.validate()
            .map_err(|e| Error::schema(end_line, e.to_string()))?;
        trees.push(tree);
    }
    Ok(trees)
}

pub(crate) struct Lines {
    reader: BufReader<File>,
    pub(crate) number: usize,
    buf: String,
}

impl Lines {
    pub(crate) fn open(path: &Path) -> Result<Self> {
        Ok(Lines {
            reader: BufReader::new(File::open(path)?),
            number: 0,
            buf: String::new(),
        })
    }

    pub(crate) fn expect_header(&mut self, header: &str) -> Result<()> {
        self.buf.clear();
        if self.reader.read_line(&mut self.buf)? == 0 {
            return Err(Error::schema(1, format!("empty file, expected {header:?}")));
        }
        self.number += 1;
        let line = self.buf.trim_end_matches(['\n', '\r']);
        if line != header {
            return Err(Error::schema(
                self.number,
                format!("expected header {header:?}, got {line:?}"),
            ));
        }
        Ok(())
    }

    /// Next non-empty line split on whitespace; `None` at end of file.
    pub(crate) fn next_fields(&mut self) -> Result<Option<Vec<String>>> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.number += 1;
            if !self.buf.trim().is_empty() {
                break;
            }
        }
        Ok(Some(
            self.buf.split_whitespace().map(str::to_string).collect(),
        ))
    }
}

pub(crate) fn parse<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::schema(line, format!("cannot parse {field:?}")))
}

pub(crate) fn parse_floats<const N: usize>(line: usize, fields: &[String]) -> Result<[f64; N]> {
    let mut out = [0.0f64; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        let v: f64 = parse(line, field)?;
        if !v.is_finite() {
            return Err(Error::schema(line, format!("non-finite value {field:?}")));
        }
        *slot = v;
    }
    Ok(out)
}

fn parse_frame(line: usize, fields: &[String]) -> Result<Frame> {
    let v = parse_floats::<3>(line, fields)?;
    if v[2] <= 0.0 {
        return Err(Error::schema(
            line,
            format!("frame scale {} must be positive", v[2]),
        ));
    }
    Ok(Frame {
        cx: v[0],
        cy: v[1],
        scale: v[2],
    })
}
