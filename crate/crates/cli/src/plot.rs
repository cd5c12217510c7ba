use std::fmt::Write as _;
use std::path::PathBuf;

use canonical_snl::instance::ProblemInstance;
use canonical_snl::primal::PositionVector;
use clap::Args;

use crate::solve::{load, load_report};
use crate::{write_output, CliError, CliResult};

#[derive(Args)]
pub struct PlotArgs {
    instance: PathBuf,
    report: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Canvas width and height in pixels.
    #[arg(long, default_value_t = 600)]
    size: u32,
}

/// What to draw; coordinates are in data units.
pub struct PlotSpec {
    pub size: f64,
    pub anchors: Vec<[f64; 2]>,
    pub truth: Option<Vec<[f64; 2]>>,
    pub computed: Option<Vec<[f64; 2]>>,
}

const MARGIN: f64 = 0.05;
const GLYPH: f64 = 5.0;

fn planar(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    points
        .iter()
        .map(|p| [p[0], p.get(1).copied().unwrap_or(0.0)])
        .collect()
}

fn to_points(y: &PositionVector) -> Vec<[f64; 2]> {
    planar(&y.to_points())
}

impl PlotSpec {
    pub fn new(
        inst: &ProblemInstance,
        truth: Option<&PositionVector>,
        computed: Option<&PositionVector>,
        size: f64,
    ) -> CliResult<Self> {
        if inst.dim() > 2 {
            return Err(CliError::Input(format!(
                "plotting needs d <= 2, instance has d = {}",
                inst.dim()
            )));
        }
        Ok(Self {
            size,
            anchors: planar(inst.anchors()),
            truth: truth.map(to_points),
            computed: computed.map(to_points),
        })
    }

    /// Square data window around everything drawn, padded by `MARGIN`.
    fn window(&self) -> ([f64; 2], f64) {
        let all = self
            .anchors
            .iter()
            .chain(self.truth.iter().flatten())
            .chain(self.computed.iter().flatten());
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in all {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let pad = span * MARGIN;
        let centre = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let half = span / 2.0 + pad;
        ([centre[0] - half, centre[1] - half], 2.0 * half)
    }

    pub fn render(&self) -> String {
        let (origin, extent) = self.window();
        let scale = self.size / extent;
        let px = |p: &[f64; 2]| {
            (
                (p[0] - origin[0]) * scale,
                self.size - (p[1] - origin[1]) * scale,
            )
        };
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
            self.size
        );
        if let (Some(t), Some(c)) = (&self.truth, &self.computed) {
            for (i, (a, b)) in t.iter().zip(c).enumerate() {
                let (x1, y1) = px(a);
                let (x2, y2) = px(b);
                let err = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                let _ = writeln!(
                    s,
                    r#"<line class="error" data-sensor="{i}" data-error="{err:e}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-width="1"/>"#
                );
            }
        }
        for (i, p) in self.truth.iter().flatten().enumerate() {
            let (x, y) = px(p);
            let _ = writeln!(
                s,
                r#"<circle class="truth" data-sensor="{i}" cx="{x:.3}" cy="{y:.3}" r="{GLYPH}" fill="none" stroke="blue" stroke-width="1.5"/>"#
            );
        }
        for (i, p) in self.computed.iter().flatten().enumerate() {
            let (x, y) = px(p);
            let _ = writeln!(
                s,
                r#"<polygon class="computed" data-sensor="{i}" points="{}" fill="red"/>"#,
                star(x, y)
            );
        }
        for (k, p) in self.anchors.iter().enumerate() {
            let (x, y) = px(p);
            let _ = writeln!(
                s,
                r#"<rect class="anchor" data-anchor="{k}" x="{:.3}" y="{:.3}" width="{w}" height="{w}" fill="green"/>"#,
                x - GLYPH,
                y - GLYPH,
                w = 2.0 * GLYPH
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Five-pointed star centred on `(x, y)`.
fn star(x: f64, y: f64) -> String {
    let mut pts = Vec::with_capacity(10);
    for k in 0..10 {
        let r = if k % 2 == 0 { GLYPH * 1.2 } else { GLYPH * 0.5 };
        let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
        pts.push(format!("{:.3},{:.3}", x + r * a.cos(), y + r * a.sin()));
    }
    pts.join(" ")
}

pub fn run(args: &PlotArgs) -> CliResult<()> {
    let (inst, truth) = load(&args.instance)?;
    let report = load_report(&args.report)?;
    if truth.is_none() {
        eprintln!("csnl: warning: instance has no ground truth; plotting computed positions only");
    }
    let computed = report.position_vector(inst.dim());
    let spec = PlotSpec::new(
        &inst,
        truth.as_ref().map(|t| t.positions()),
        computed.as_ref(),
        f64::from(args.size),
    )?;
    write_output(args.output.as_deref(), spec.render().as_bytes())
}
