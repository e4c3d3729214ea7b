use crate::diffcore::Tensor;
use crate::envs::{EnvSpec, GridState};

/// Mass at or above which a cell is drawn in a distribution frame.
pub const VISIBLE_MASS: f64 = 0.1;

/// One line per object: `.` for empty cells, the object's letter where it sits.
pub fn render_state(spec: &EnvSpec, s: &GridState) -> String {
    let mut out = String::new();
    for (o, &p) in s.pos.iter().enumerate() {
        let letter = spec.objects.get(o).map_or('?', |obj| obj.letter());
        let line: String = (0..spec.positions).map(|q| if q == p { letter } else { '.' }).collect();
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// One line per row of a predicted |O|×D tensor. A unique argmax is drawn in
/// uppercase; other cells with visible mass in lowercase.
pub fn render_distribution(spec: &EnvSpec, x: &Tensor) -> String {
    let mut out = String::new();
    for o in 0..x.rows() {
        let letter = spec.objects.get(o).map_or('?', |obj| obj.letter());
        let row = x.row(o);
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unique = row.iter().filter(|&&v| v == best).count() == 1;
        let line: String = row
            .iter()
            .map(|&v| {
                if unique && v == best {
                    letter.to_ascii_uppercase()
                } else if v >= VISIBLE_MASS {
                    letter
                } else {
                    '.'
                }
            })
            .collect();
        out.push_str(&line);
        out.push('\n');
    }
    out
}
