//! Static SVG line plots of grid profiles, energy histories and ray samples.

use std::fs;
use std::ops::Range;
use std::path::Path;

use hsnum::asymptotics::{interpolate, log_radii, RayDirection, RaySamples};
use hsnum::cylinder_grid::read_csv_str;
use hsnum::{CylGrid, HsError};
use plotters::coord::ranged1d::{AsRangedCoord, Ranged, ValueFormatter};
use plotters::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Entry, Report};

const SIZE: (u32, u32) = (800, 560);
const PROFILE_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn plot_error(e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("plot: {e}"))
}

/// Values of `grid` along each ray, from the first node to the edge.
pub fn grid_profiles(grid: &CylGrid) -> Vec<Series> {
    let dirs: &[RayDirection] = if grid.is_radial() {
        &[RayDirection::RhoAxis]
    } else {
        &[RayDirection::RhoAxis, RayDirection::RAxis, RayDirection::Diagonal]
    };
    let rho_max = grid.rho_max();
    let r_max = grid.r_max().unwrap_or(rho_max);
    let mut out = Vec::new();
    for &d in dirs {
        let (lo, edge) = match d {
            RayDirection::RhoAxis => (grid.rho_nodes[0], rho_max),
            RayDirection::RAxis => (grid.r_nodes[0], r_max),
            RayDirection::Diagonal => (
                grid.rho_nodes[0].max(grid.r_nodes[0]) * std::f64::consts::SQRT_2,
                rho_max.min(r_max) * std::f64::consts::SQRT_2,
            ),
        };
        let (dx, dy) = d.unit();
        let points = log_radii(lo, edge * (1.0 - 1e-12), PROFILE_POINTS)
            .into_iter()
            .filter_map(|t| interpolate(grid, t * dx, t * dy).map(|v| (t, v)))
            .collect();
        out.push(Series {
            label: d.to_string(),
            points,
        });
    }
    out
}

/// `(iteration, energy)` from a history table with a header row.
pub fn read_history(text: &str) -> Result<Series, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HsError::Parse(format!("history table has no '{name}' column")))
    };
    let (ci, ce) = (col("iteration")?, col("energy")?);
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64, CliError> {
            let field = rec.get(c).unwrap_or("");
            field
                .trim()
                .parse()
                .map_err(|_| HsError::Parse(format!("history row {}: bad number '{field}'", line + 1)).into())
        };
        points.push((parse(ci)?, parse(ce)?));
    }
    Ok(Series {
        label: "energy".into(),
        points,
    })
}

fn span(values: impl Iterator<Item = f64>, log: bool) -> Option<Range<f64>> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo <= hi) {
        return None;
    }
    Some(if log {
        let pad = if hi > lo { (hi / lo).powf(0.05) } else { 2.0 };
        lo / pad..hi * pad
    } else {
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        lo - pad..hi + pad
    })
}

fn draw<X, Y>(fig: &Figure, x: X, y: Y, path: &Path) -> Result<(), CliError>
where
    X: AsRangedCoord<Value = f64>,
    Y: AsRangedCoord<Value = f64>,
    X::CoordDescType: Ranged<ValueType = f64> + ValueFormatter<f64>,
    Y::CoordDescType: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&fig.title, ("sans-serif", 20))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(80)
        .build_cartesian_2d(x, y)
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .x_desc(fig.x_label.as_str())
        .y_desc(fig.y_label.as_str())
        .draw()
        .map_err(plot_error)?;
    for (i, s) in fig.series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(plot_error)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_error)?;
    root.present().map_err(plot_error)?;
    Ok(())
}

/// Renders `fig` to `path`, dropping points that a log axis cannot show.
/// Returns the number of points drawn.
pub fn render(fig: &Figure, axes: Axes, path: &Path) -> Result<usize, CliError> {
    let keep = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!axes.log_x || x > 0.0) && (!axes.log_y || y > 0.0)
    };
    let series: Vec<Series> = fig
        .series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(keep).collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    let (Some(xr), Some(yr)) = (span(all().map(|p| p.0), axes.log_x), span(all().map(|p| p.1), axes.log_y)) else {
        return Err(plot_error("no drawable points"));
    };
    let count = all().count();
    let fig = Figure {
        title: fig.title.clone(),
        x_label: fig.x_label.clone(),
        y_label: fig.y_label.clone(),
        series,
    };
    match (axes.log_x, axes.log_y) {
        (false, false) => draw(&fig, xr, yr, path)?,
        (true, false) => draw(&fig, xr.log_scale(), yr, path)?,
        (false, true) => draw(&fig, xr, yr.log_scale(), path)?,
        (true, true) => draw(&fig, xr.log_scale(), yr.log_scale(), path)?,
    }
    Ok(count)
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let input = cfg.path("input")?;
    let text = fs::read_to_string(&input).map_err(HsError::from)?;
    let first = text.lines().next().unwrap_or("").trim();
    let kind = match cfg.text("kind")? {
        "auto" if first.starts_with("# n=") => "grid",
        "auto" if first.starts_with("# direction=") => "rays",
        "auto" => "history",
        other => other,
    };
    let (series, x_label, y_label) = match kind {
        "grid" => (grid_profiles(&read_csv_str(&text)?), "radius along the ray", "u"),
        "rays" => {
            let r = RaySamples::from_csv_str(&text)?;
            let points = r.radii.iter().copied().zip(r.values.iter().copied()).collect();
            (
                vec![Series {
                    label: r.direction.to_string(),
                    points,
                }],
                "radius",
                "u",
            )
        }
        _ => (vec![read_history(&text)?], "iteration", "energy"),
    };
    let axes = match cfg.text("axes")? {
        "linear" => Axes { log_x: false, log_y: false },
        "log-x" => Axes { log_x: true, log_y: false },
        "log-y" => Axes { log_x: false, log_y: true },
        "log-log" => Axes { log_x: true, log_y: true },
        _ => {
            let log = kind != "history";
            Axes { log_x: log, log_y: log }
        }
    };
    let title = match cfg.text("title") {
        Ok(t) => t.to_string(),
        Err(_) => input.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let fig = Figure {
        title,
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
    };
    let path = cfg.out_path("output")?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let drawn = render(&fig, axes, &path)?;
    let mut out = Report::default();
    out.push(Entry::text("kind", kind, ""));
    out.push(Entry::flag("log_x", axes.log_x, ""));
    out.push(Entry::flag("log_y", axes.log_y, ""));
    out.push(Entry::int("series", fig.series.len() as u64, "", ""));
    out.push(Entry::int("points", drawn as u64, "", "after dropping points a log axis cannot show"));
    out.files.push(path);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hsnum::cylinder_grid::build_grid;

    #[test]
    fn history_parsing() {
        let s = read_history("iteration,energy,defect\n0,2.5,0\n1,2.25,1e-16\n").unwrap();
        assert_eq!(s.points, vec![(0.0, 2.5), (1.0, 2.25)]);
        assert!(read_history("step,value\n0,1\n").is_err());
    }

    #[test]
    fn profiles_follow_the_grid() {
        let g = build_grid(3, 2, 4.0, 4.0, 16, 16, 1.0).unwrap().map_nodes(|x, y| 1.0 / (1.0 + x + 2.0 * y));
        let p = grid_profiles(&g);
        assert_eq!(p.len(), 3);
        // below the first rho node the grid is flat (even extension)
        let rho0 = g.rho_nodes[0];
        for &(t, v) in &p[1].points {
            assert!((v - 1.0 / (1.0 + rho0 + 2.0 * t)).abs() < 0.01, "r = {t}: {v}");
        }
    }

    #[test]
    fn log_axes_drop_nonpositive_points() {
        let dir = std::env::temp_dir().join(format!("hsnum-plot-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let fig = Figure {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "s".into(),
                points: vec![(0.0, 1.0), (1.0, 1.0), (2.0, 0.5), (4.0, 0.0)],
            }],
        };
        let path = dir.join("a.svg");
        let drawn = render(&fig, Axes { log_x: true, log_y: true }, &path).unwrap();
        assert_eq!(drawn, 2);
        assert!(fs::read_to_string(&path).unwrap().starts_with("<svg"));
        assert_eq!(render(&fig, Axes { log_x: false, log_y: false }, &path).unwrap(), 4);
        fs::remove_dir_all(&dir).ok();
    }
}
