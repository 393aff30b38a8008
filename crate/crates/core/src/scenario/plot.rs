use std::fmt::Write as _;

use serde_json::Value;
use thiserror::Error;

use crate::circuit::{PathRecord, RecordEntry};
use crate::pilotwave::io::{read_trajectories, CsvError, Trajectory};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("trajectory csv: {0}")]
    Csv(#[from] CsvError),
    #[error("path records: {0}")]
    Json(String),
    #[error("path records: record {index}: {message}")]
    Record { index: usize, message: String },
}

/// Something `render_svg` can draw.
#[derive(Clone, Debug, PartialEq)]
pub enum PlotInput {
    Trajectories { dim: usize, trajs: Vec<Trajectory> },
    PathRecords(Vec<PathRecord>),
    /// Records of the same hidden value under two settings.
    PathPairs(Vec<[PathRecord; 2]>),
}

fn record(index: usize, v: Value) -> Result<PathRecord, PlotError> {
    serde_json::from_value(v).map_err(|e| PlotError::Record {
        index,
        message: e.to_string(),
    })
}

/// Parses a trajectory CSV, a path-record JSON array, or paired records
/// (an array of two-record arrays, or an object with a `pairs` field).
pub fn read_plot_input(bytes: &[u8]) -> Result<PlotInput, PlotError> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if !matches!(first, Some(b'[') | Some(b'{')) {
        let (dim, trajs) = read_trajectories(bytes)?;
        return Ok(PlotInput::Trajectories { dim, trajs });
    }
    let v: Value = serde_json::from_slice(bytes).map_err(|e| PlotError::Json(e.to_string()))?;
    let items = match v {
        Value::Array(a) => a,
        Value::Object(mut o) => match o.remove("pairs") {
            Some(Value::Array(a)) => a,
            _ => return Err(PlotError::Json("object input needs a `pairs` array".into())),
        },
        _ => return Err(PlotError::Json("expected an array".into())),
    };
    if items.first().is_some_and(Value::is_array) {
        items
            .into_iter()
            .enumerate()
            .map(|(i, p)| match p {
                Value::Array(mut ab) if ab.len() == 2 => {
                    let b = ab.pop().expect("two items");
                    let a = ab.pop().expect("two items");
                    Ok([record(i, a)?, record(i, b)?])
                }
                _ => Err(PlotError::Record {
                    index: i,
                    message: "expected a pair of records".into(),
                }),
            })
            .collect::<Result<_, _>>()
            .map(PlotInput::PathPairs)
    } else {
        items
            .into_iter()
            .enumerate()
            .map(|(i, r)| record(i, r))
            .collect::<Result<_, _>>()
            .map(PlotInput::PathRecords)
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;

const STYLE: &str = ".axis{stroke:#000;stroke-width:1}\
.zero{stroke:#888;stroke-width:1;stroke-dasharray:4 4}\
.traj{fill:none;stroke:#1f77b4;stroke-width:0.6;stroke-opacity:0.7}\
.left{fill:none;stroke:#2ca02c;stroke-width:1}\
.right{fill:none;stroke:#9467bd;stroke-width:1}\
.changed{fill:none;stroke:#d62728;stroke-width:2}";

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, default: Frame) -> Frame {
        let mut f = Frame {
            x: (f64::INFINITY, f64::NEG_INFINITY),
            y: (f64::INFINITY, f64::NEG_INFINITY),
        };
        for (x, y) in points {
            f.x = (f.x.0.min(x), f.x.1.max(x));
            f.y = (f.y.0.min(y), f.y.1.max(y));
        }
        if !(f.x.0 <= f.x.1) {
            return default;
        }
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        Frame {
            x: widen(f.x),
            y: widen(f.y),
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (x - self.x.0) / (self.x.1 - self.x.0);
        let sy = (y - self.y.0) / (self.y.1 - self.y.0);
        (MARGIN + sx * (WIDTH - 2.0 * MARGIN), HEIGHT - MARGIN - sy * (HEIGHT - 2.0 * MARGIN))
    }
}

struct Canvas {
    frame: Frame,
    body: String,
}

impl Canvas {
    fn polyline(&mut self, class: &str, points: &[(f64, f64)]) {
        if points.is_empty() {
            return;
        }
        let mut pts = String::new();
        for (i, &(x, y)) in points.iter().enumerate() {
            let (px, py) = self.frame.map(x, y);
            if i > 0 {
                pts.push(' ');
            }
            write!(pts, "{px:.3},{py:.3}").expect("string write");
        }
        writeln!(self.body, "<polyline class=\"{class}\" points=\"{pts}\"/>").expect("string write");
    }

    fn finish(self, x_label: &str, y_label: &str) -> String {
        let f = &self.frame;
        let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
        let mut s = String::new();
        writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        )
        .expect("string write");
        writeln!(s, "<style>{STYLE}</style>").expect("string write");
        writeln!(s, "<line class=\"axis\" x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\"/>", WIDTH - MARGIN).expect("string write");
        writeln!(s, "<line class=\"axis\" x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN}\"/>").expect("string write");
        if f.y.0 < 0.0 && f.y.1 > 0.0 {
            let (_, zy) = f.map(f.x.0, 0.0);
            writeln!(s, "<line class=\"zero\" x1=\"{x0}\" y1=\"{zy:.3}\" x2=\"{}\" y2=\"{zy:.3}\"/>", WIDTH - MARGIN)
                .expect("string write");
        }
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label} [{:.3}, {:.3}]</text>",
            WIDTH / 2.0,
            HEIGHT - 15.0,
            f.x.0,
            f.x.1
        )
        .expect("string write");
        writeln!(
            s,
            "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{y_label} [{:.3}, {:.3}]</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            f.y.0,
            f.y.1
        )
        .expect("string write");
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

/// Lane of a path, port or detector label: its trailing digit.
fn lane(label: &str) -> f64 {
    label
        .chars()
        .rev()
        .find_map(|c| c.to_digit(10))
        .map_or(0.0, |d| d as f64 - 1.0)
}

/// Schematic points of one arm: the left arm runs leftward from the source
/// and the right arm rightward, one unit per layer; within a lane the pair's
/// hidden coordinate sets the height.
fn arm_points(entries: &[RecordEntry], left: bool, x: f64) -> Vec<(f64, f64)> {
    let dir = if left { -1.0 } else { 1.0 };
    entries
        .iter()
        .map(|(layer, label)| (dir * *layer as f64, lane(label) + 0.1 + 0.8 * x))
        .collect()
}

fn record_points(r: &PathRecord) -> [Vec<(f64, f64)>; 2] {
    [
        arm_points(&r.record_l, true, r.hidden.x_l),
        arm_points(&r.record_r, false, r.hidden.x_r),
    ]
}

/// Draws `points` split into runs: segment k (ending at point k) is
/// highlighted when `changed[k]`.
fn draw_marked(c: &mut Canvas, class: &str, points: &[(f64, f64)], changed: &[bool]) {
    if points.len() < 2 {
        c.polyline(class, points);
        return;
    }
    let mut start = 1;
    for k in 2..=points.len() {
        if k == points.len() || changed[k] != changed[start] {
            c.polyline(if changed[start] { "changed" } else { class }, &points[start - 1..k]);
            start = k;
        }
    }
}

/// Left-arm segments that differ between the two records of a pair.
fn changed_segments(a: &[RecordEntry], b: &[RecordEntry], own: &[RecordEntry]) -> Vec<bool> {
    (0..own.len())
        .map(|k| k > 0 && (a.get(k) != b.get(k) || a.get(k - 1) != b.get(k - 1)))
        .collect()
}

/// Deterministic SVG rendering: one polyline per trajectory, or per record
/// arm for path records, over axes with a dashed zero line.
pub fn render_svg(input: &PlotInput) -> String {
    match input {
        PlotInput::Trajectories { dim, trajs } => {
            let coords = |t: &Trajectory| -> Vec<(f64, f64)> {
                t.points
                    .iter()
                    .map(|&(time, q)| if *dim == 1 { (time, q[0]) } else { (q[0], q[1]) })
                    .collect()
            };
            let all: Vec<Vec<(f64, f64)>> = trajs.iter().map(coords).collect();
            let frame = Frame::fit(all.iter().flatten().copied(), Frame { x: (0.0, 1.0), y: (-1.0, 1.0) });
            let mut c = Canvas { frame, body: String::new() };
            for pts in &all {
                c.polyline("traj", pts);
            }
            if *dim == 1 {
                c.finish("t", "q1")
            } else {
                c.finish("q1", "q2")
            }
        }
        PlotInput::PathRecords(records) => {
            let all: Vec<[Vec<(f64, f64)>; 2]> = records.iter().map(record_points).collect();
            let frame = Frame::fit(all.iter().flatten().flatten().copied(), Frame { x: (-3.0, 3.0), y: (0.0, 4.0) });
            let mut c = Canvas { frame, body: String::new() };
            for [l, r] in &all {
                c.polyline("left", l);
                c.polyline("right", r);
            }
            c.finish("layer (left arm negative)", "lane")
        }
        PlotInput::PathPairs(pairs) => {
            let all: Vec<[[Vec<(f64, f64)>; 2]; 2]> = pairs.iter().map(|[a, b]| [record_points(a), record_points(b)]).collect();
            let frame = Frame::fit(
                all.iter().flatten().flatten().flatten().copied(),
                Frame { x: (-3.0, 3.0), y: (0.0, 4.0) },
            );
            let mut c = Canvas { frame, body: String::new() };
            for ([a, b], pts) in pairs.iter().zip(&all) {
                for (rec, [l, r]) in [a, b].into_iter().zip(pts) {
                    let marks = changed_segments(&a.record_l, &b.record_l, &rec.record_l);
                    draw_marked(&mut c, "left", l, &marks);
                    c.polyline("right", r);
                }
            }
            c.finish("layer (left arm negative)", "lane")
        }
    }
}
