use std::fmt::Write as _;

use whitney_core::cube_partition::CubeCell;
use whitney_core::domain_partition::DomainCell;
use whitney_core::dyadic::DyadicCube;
use whitney_core::whitney::WhitneyCover;

const SIZE: f64 = 640.0;

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>"
    );
}

fn rect(out: &mut String, cube: &DyadicCube, fill: &str) {
    // flip x2 so the svg y axis points down while the domain y axis points up
    let s = cube.side() * SIZE;
    let x = cube.lo(0) * SIZE;
    let y = (1.0 - cube.hi(1)) * SIZE;
    let _ = writeln!(
        out,
        "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{s:.3}\" height=\"{s:.3}\" \
         fill=\"{fill}\" stroke=\"black\" stroke-width=\"0.6\"/>"
    );
}

fn level_fill(level: u32) -> String {
    format!("hsl({},60%,75%)", (level * 47) % 360)
}

/// Cover plot: one rectangle per cube, hue keyed to the dyadic level.
pub fn cover_svg(cover: &WhitneyCover) -> String {
    let mut out = String::new();
    header(&mut out);
    for c in &cover.cubes {
        rect(&mut out, c, &level_fill(c.level));
    }
    out.push_str("</svg>\n");
    out
}

fn cell_fill(i: usize) -> String {
    format!("hsl({},65%,72%)", (i * 61) % 360)
}

/// Partition plot: every dyadic primitive of a cell shares the cell's hue.
/// Primitives are painted coarse-to-fine, so the cells living inside a
/// ring's hole overdraw the ring's outer rectangle.
pub fn partition_svg(cells: &[DomainCell]) -> String {
    let mut out = String::new();
    header(&mut out);
    let mut pieces: Vec<(&CubeCell, usize)> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        for piece in &cell.pieces {
            pieces.push((piece, i));
        }
    }
    pieces.sort_by_key(|(p, i)| (p.outer().level, *i));
    for (piece, i) in pieces {
        rect(&mut out, piece.outer(), &cell_fill(i));
    }
    out.push_str("</svg>\n");
    out
}
