//! Plain-text scene writers: SVG footprints and OBJ box meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blockgen_core::geometry::Cuboid;
use blockgen_core::Result;

/// One `<g>` of footprint polygons sharing a style. `dx` shifts the whole
/// layer horizontally, which is how interpolation strips line up steps.
pub struct Layer<'a> {
    pub cuboids: &'a [Cuboid],
    pub fill: &'a str,
    pub opacity: f64,
    pub dx: f64,
}

impl<'a> Layer<'a> {
    pub fn solo(cuboids: &'a [Cuboid]) -> Self {
        Layer {
            cuboids,
            fill: "#728eb4",
            opacity: 0.85,
            dx: 0.0,
        }
    }
}

/// Renders layers into a standalone SVG. The y axis is flipped so north in
/// layout coordinates is up on screen; floats keep full precision so equal
/// scenes produce byte-equal documents.
pub fn svg_document(layers: &[Layer]) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for layer in layers {
        for c in layer.cuboids {
            for [x, y] in c.footprint_corners() {
                lo[0] = lo[0].min(x + layer.dx);
                hi[0] = hi[0].max(x + layer.dx);
                lo[1] = lo[1].min(y);
                hi[1] = hi[1].max(y);
            }
        }
    }
    if !(lo[0].is_finite() && hi[0].is_finite()) {
        (lo, hi) = ([0.0, 0.0], [1.0, 1.0]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let margin = 0.05 * span;
    let stroke = 0.01 * span;
    // flip(y) reflects about the vertical midline, keeping the same range.
    let flip = |y: f64| lo[1] + hi[1] - y;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        lo[0] - margin,
        lo[1] - margin,
        hi[0] - lo[0] + 2.0 * margin,
        hi[1] - lo[1] + 2.0 * margin,
    );
    for layer in layers {
        let _ = writeln!(
            s,
            "<g fill=\"{}\" fill-opacity=\"{}\" stroke=\"#1c2431\" stroke-width=\"{}\">",
            layer.fill, layer.opacity, stroke,
        );
        for c in layer.cuboids {
            let points: Vec<String> = c
                .footprint_corners()
                .iter()
                .map(|[x, y]| format!("{},{}", x + layer.dx, flip(*y)))
                .collect();
            let _ = writeln!(s, "<polygon points=\"{}\"/>", points.join(" "));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: impl AsRef<Path>, layers: &[Layer]) -> Result<()> {
    fs::write(path, svg_document(layers))?;
    Ok(())
}

/// Writes one closed box mesh per cuboid: 8 vertices, 6 quad faces wound
/// counter-clockwise seen from outside.
pub fn obj_document(cuboids: &[Cuboid]) -> String {
    let mut s = String::from("# blockgen layout mesh\n");
    let mut base = 0usize;
    for c in cuboids {
        for [x, y, z] in c.corners_3d() {
            let _ = writeln!(s, "v {x} {y} {z}");
        }
        // corners_3d: 0..4 bottom ring counter-clockwise from above, 4..8 top.
        const FACES: [[usize; 4]; 6] = [
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        for f in FACES {
            let _ = writeln!(
                s,
                "f {} {} {} {}",
                base + f[0] + 1,
                base + f[1] + 1,
                base + f[2] + 1,
                base + f[3] + 1,
            );
        }
        base += 8;
    }
    s
}

pub fn write_obj(path: impl AsRef<Path>, cuboids: &[Cuboid]) -> Result<()> {
    fs::write(path, obj_document(cuboids))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxes() -> Vec<Cuboid> {
        vec![
            Cuboid::new(0.0, 0.0, 2.0, 1.0, 3.0, 0.2).unwrap(),
            Cuboid::new(4.0, 1.0, 1.0, 1.0, 2.0, -0.4).unwrap(),
        ]
    }

    #[test]
    fn svg_has_one_polygon_per_cuboid_and_one_group_per_layer() {
        let a = boxes();
        let b = boxes();
        let doc = svg_document(&[
            Layer::solo(&a),
            Layer {
                cuboids: &b,
                fill: "#cccccc",
                opacity: 0.4,
                dx: 6.0,
            },
        ]);
        assert_eq!(doc.matches("<polygon").count(), 4);
        assert_eq!(doc.matches("<g ").count(), 2);
        assert!(doc.starts_with("<svg "));
        assert!(doc.ends_with("</svg>\n"));
    }

    #[test]
    fn equal_scenes_render_byte_equal_documents() {
        let a = boxes();
        let b = boxes();
        assert_eq!(
            svg_document(&[Layer::solo(&a)]),
            svg_document(&[Layer::solo(&b)])
        );
    }

    #[test]
    fn obj_counts_and_indices_are_per_box() {
        let doc = obj_document(&boxes());
        assert_eq!(doc.lines().filter(|l| l.starts_with("v ")).count(), 16);
        assert_eq!(doc.lines().filter(|l| l.starts_with("f ")).count(), 12);
        // Second box's faces reference vertices 9..=16 only.
        let second: Vec<&str> = doc.lines().filter(|l| l.starts_with("f ")).skip(6).collect();
        for line in second {
            for idx in line.split_whitespace().skip(1) {
                let idx: usize = idx.parse().unwrap();
                assert!((9..=16).contains(&idx), "{line}");
            }
        }
    }

    #[test]
    fn empty_scene_still_renders_a_valid_frame() {
        let doc = svg_document(&[]);
        assert!(doc.contains("viewBox"));
        assert_eq!(doc.matches("<polygon").count(), 0);
    }
}
