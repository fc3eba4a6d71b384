//! File formats: grid JSON, point CSV, OBJ meshes and analysis reports.
//!
//! Every float is written with 17 significant digits so that a write/read
//! cycle reproduces binary64 values exactly. Files are written to a
//! temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::grid::{GridFrames, GridMeta, SurfaceGrid};
use crate::invariants::{Analysis, InvariantReport, Mode, SurfaceType};
use crate::linalg::Vec3;

pub const GRID_FORMAT: &str = "affine-surface-grid/1";

/// `f64` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that prints floats with [`fmt_f64`].
struct FullPrecision<F>(F);

impl<F: Formatter> Formatter for FullPrecision<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes to JSON with full-precision floats.
pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let mut buf = Vec::new();
    let res = if pretty {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
        value.serialize(&mut ser)
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(CompactFormatter));
        value.serialize(&mut ser)
    };
    res.map_err(|e| Error::InvalidInput(format!("cannot serialize: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

type Rows = Vec<Vec<[f64; 3]>>;

#[derive(Serialize, Deserialize)]
struct FramesFile {
    e1: Rows,
    e2: Rows,
    e3: Rows,
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    format: String,
    meta: GridMeta,
    u: Vec<f64>,
    v: Vec<f64>,
    points: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<FramesFile>,
}

fn to_rows(values: &[Vec3], nu: usize) -> Rows {
    values.chunks(nu).map(|row| row.iter().map(|p| p.0).collect()).collect()
}

fn from_rows(rows: Rows, nu: usize, nv: usize, what: &str) -> Result<Vec<Vec3>> {
    if rows.len() != nv || rows.iter().any(|r| r.len() != nu) {
        return Err(Error::Format(format!("{what} must be {nv} rows of {nu} entries")));
    }
    Ok(rows.into_iter().flatten().map(Vec3).collect())
}

/// Serializes a grid in the `affine-surface-grid/1` format.
pub fn grid_to_json(grid: &SurfaceGrid) -> Result<String> {
    grid.validate()?;
    let nu = grid.nu();
    let file = GridFile {
        format: GRID_FORMAT.to_string(),
        meta: grid.meta.clone(),
        u: grid.u.clone(),
        v: grid.v.clone(),
        points: to_rows(&grid.points, nu),
        frames: grid.frames.as_ref().map(|f| FramesFile {
            e1: to_rows(&f.e1, nu),
            e2: to_rows(&f.e2, nu),
            e3: to_rows(&f.e3, nu),
        }),
    };
    to_json(&file, false)
}

pub fn grid_from_json(text: &str) -> Result<SurfaceGrid> {
    let file: GridFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.format != GRID_FORMAT {
        return Err(Error::Format(format!("format is `{}`, expected `{GRID_FORMAT}`", file.format)));
    }
    let (nu, nv) = (file.u.len(), file.v.len());
    let frames = match file.frames {
        Some(f) => Some(GridFrames {
            e1: from_rows(f.e1, nu, nv, "frames.e1")?,
            e2: from_rows(f.e2, nu, nv, "frames.e2")?,
            e3: from_rows(f.e3, nu, nv, "frames.e3")?,
        }),
        None => None,
    };
    let grid = SurfaceGrid {
        points: from_rows(file.points, nu, nv, "points")?,
        u: file.u,
        v: file.v,
        frames,
        meta: file.meta,
    };
    grid.validate()?;
    Ok(grid)
}

pub fn write_grid(path: &Path, grid: &SurfaceGrid) -> Result<()> {
    write_atomic(path, grid_to_json(grid)?.as_bytes())
}

pub fn read_grid(path: &Path) -> Result<SurfaceGrid> {
    grid_from_json(&fs::read_to_string(path)?)
}

/// `u,v,x,y,z` rows in grid order.
pub fn grid_to_csv(grid: &SurfaceGrid) -> Result<String> {
    grid.validate()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["u", "v", "x", "y", "z"]).map_err(csv_err)?;
    for iv in 0..grid.nv() {
        for iu in 0..grid.nu() {
            let p = grid.point(iu, iv);
            let row = [grid.u[iu], grid.v[iv], p[0], p[1], p[2]].map(fmt_f64);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII numbers"))
}

/// Re-ingests [`grid_to_csv`] output. Frames and metadata are not stored in CSV.
pub fn grid_from_csv(text: &str) -> Result<SurfaceGrid> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(e.to_string()))?;
    if header != vec!["u", "v", "x", "y", "z"] {
        return Err(Error::Format("CSV header must be u,v,x,y,z".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push([vals[0], vals[1], vals[2], vals[3], vals[4]]);
    }
    let nu = rows.iter().take_while(|r| r[1] == rows[0][1]).count();
    if nu == 0 || rows.len() % nu != 0 {
        return Err(Error::Format("CSV rows do not form a rectangular grid".into()));
    }
    let u: Vec<f64> = rows[..nu].iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows.chunks(nu).map(|c| c[0][1]).collect();
    for (k, r) in rows.iter().enumerate() {
        if r[0] != u[k % nu] || r[1] != v[k / nu] {
            return Err(Error::Format(format!("CSV row {} breaks the v-outer, u-inner order", k + 2)));
        }
    }
    let grid = SurfaceGrid {
        u,
        v,
        points: rows.iter().map(|r| Vec3::new(r[2], r[3], r[4])).collect(),
        frames: None,
        meta: GridMeta::default(),
    };
    grid.validate()?;
    Ok(grid)
}

/// Triangle mesh: one vertex per grid point, two counter-clockwise triangles per cell.
pub fn grid_to_obj(grid: &SurfaceGrid) -> Result<String> {
    grid.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "# {}×{} grid", grid.nu(), grid.nv());
    for p in &grid.points {
        let _ = writeln!(out, "v {} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
    }
    for iv in 0..grid.nv() - 1 {
        for iu in 0..grid.nu() - 1 {
            let a = grid.index(iu, iv) + 1;
            let b = grid.index(iu + 1, iv) + 1;
            let c = grid.index(iu + 1, iv + 1) + 1;
            let d = grid.index(iu, iv + 1) + 1;
            let _ = writeln!(out, "f {a} {b} {c}");
            let _ = writeln!(out, "f {a} {c} {d}");
        }
    }
    Ok(out)
}

/// Aggregates printed after an analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub mode: Mode,
    pub nu: usize,
    pub nv: usize,
    pub hyperbolic: usize,
    pub elliptic: usize,
    pub degenerate: usize,
    pub affine_computed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub max_abs_k: Option<f64>,
    pub max_abs_h: Option<f64>,
}

impl AnalysisSummary {
    pub fn of(a: &Analysis) -> Self {
        AnalysisSummary {
            mode: a.mode,
            nu: a.nu,
            nv: a.nv,
            hyperbolic: a.count(SurfaceType::Hyperbolic),
            elliptic: a.count(SurfaceType::Elliptic),
            degenerate: a.count(SurfaceType::Degenerate),
            affine_computed: a.affine_computed(),
            skipped: a.skipped.clone(),
            max_abs_k: a.max_abs_k().map(|x| x.0),
            max_abs_h: a.max_abs_h().map(|x| x.0),
        }
    }
}

impl std::fmt::Display for AnalysisSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
        write!(
            f,
            "{}×{} points: {} hyperbolic, {} elliptic, {} degenerate; max|K_aff| = {}, max|H_aff| = {}",
            self.nu,
            self.nv,
            self.hyperbolic,
            self.elliptic,
            self.degenerate,
            opt(self.max_abs_k),
            opt(self.max_abs_h)
        )?;
        if let Some(reason) = &self.skipped {
            write!(f, "; affine steps skipped: {reason}")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    summary: AnalysisSummary,
    points: &'a [InvariantReport],
}

pub fn report_to_json(a: &Analysis) -> Result<String> {
    to_json(
        &ReportFile {
            summary: AnalysisSummary::of(a),
            points: &a.reports,
        },
        true,
    )
}

/// One row per grid point; fields the analysis did not compute are left empty.
pub fn report_to_csv(a: &Analysis) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record([
        "iu", "iv", "u", "v", "h11", "h12", "h22", "type", "k_aff", "h_aff", "l11", "l12", "l22", "n1", "n2", "n3",
    ])
    .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in &a.reports {
        let l = r.l;
        let n = r.affine_normal;
        w.write_record([
            r.iu.to_string(),
            r.iv.to_string(),
            fmt_f64(r.u),
            fmt_f64(r.v),
            fmt_f64(r.h.h11),
            fmt_f64(r.h.h12),
            fmt_f64(r.h.h22),
            r.surface_type.as_str().to_string(),
            opt(r.k_aff),
            opt(r.h_aff),
            opt(l.map(|l| l.l11)),
            opt(l.map(|l| l.l12)),
            opt(l.map(|l| l.l22)),
            opt(n.map(|n| n[0])),
            opt(n.map(|n| n[1])),
            opt(n.map(|n| n[2])),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}
