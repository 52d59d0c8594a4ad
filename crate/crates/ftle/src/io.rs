//! Versioned artifact files.
//!
//! Velocity grids and FTLE fields are binary containers (little-endian,
//! self-describing header, SHA-256-based trailing checksum); ridges and
//! classification profiles are CSV with `#` metadata lines and the same
//! trailing checksum in a comment. All floats in text formats use the
//! shortest decimal that round-trips, so save → load → save is
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::classify::{AlignmentSensitivity, ClassificationProfile, PointClassification, ProfilePoint};
use crate::field::{GriddedField, InterpMode, NoiseSpec};
use crate::flowmap::{FieldProvenance, FtleField, GridSpec, NodeFlag};
use crate::ridge::{RefinementSchedule, Ridge, RidgePoint, RidgeState, StopReason};
use crate::{perp, FtleError, Result, Vec2};

const GRID_MAGIC: &[u8; 8] = b"VELGRID\0";
const FTLE_MAGIC: &[u8; 8] = b"FTLEFLD\0";
const GRID_TEXT_MAGIC: &str = "# velocity-grid-text";
const RIDGE_MAGIC: &str = "# ridge-set";
const PROFILE_MAGIC: &str = "# profile-set";
const FTLE_CSV_MAGIC: &str = "# ftle-field-csv";
const VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// checksummed byte buffers

fn digest8(bytes: &[u8]) -> [u8; 8] {
    let d = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&d[..8]);
    out
}

fn write_with_checksum(path: &Path, mut bytes: Vec<u8>) -> Result<()> {
    let sum = digest8(&bytes);
    bytes.extend_from_slice(&sum);
    fs::write(path, bytes)?;
    Ok(())
}

/// Split off and verify the trailing 8-byte checksum.
fn checked_body<'a>(bytes: &'a [u8], min_len: usize, path: &Path) -> Result<&'a [u8]> {
    if bytes.len() < min_len + 8 {
        return Err(FtleError::Truncated {
            path: path.display().to_string(),
        });
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if digest8(body) != *sum {
        return Err(FtleError::ChecksumMismatch {
            path: path.display().to_string(),
        });
    }
    Ok(body)
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Self {
        ByteReader { buf, pos: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(FtleError::Truncated {
                path: self.path.display().to_string(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn count(&mut self, what: &str, limit: usize) -> Result<usize> {
        let n = self.u64()?;
        if n > limit as u64 {
            return Err(FtleError::Malformed {
                path: self.path.display().to_string(),
                reason: format!("implausible {what} count {n}"),
            });
        }
        Ok(n as usize)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(FtleError::Malformed {
                path: self.path.display().to_string(),
                reason: format!(
                    "{} unexpected trailing bytes",
                    self.buf.len() - self.pos
                ),
            });
        }
        Ok(())
    }
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn check_version(found: u32, path: &Path) -> Result<()> {
    if found != VERSION {
        return Err(FtleError::VersionMismatch {
            found,
            expected: VERSION,
            path: path.display().to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gridded velocity fields

/// Save a gridded velocity field as the binary container.
pub fn save_gridded(field: &GriddedField, path: impl AsRef<Path>) -> Result<()> {
    let mut b: Vec<u8> = Vec::new();
    b.extend_from_slice(GRID_MAGIC);
    push_u32(&mut b, VERSION);
    push_f64(&mut b, field.origin.x);
    push_f64(&mut b, field.origin.y);
    push_f64(&mut b, field.dx);
    push_u64(&mut b, field.nx as u64);
    push_u64(&mut b, field.ny as u64);
    push_u32(&mut b, match field.interp {
        InterpMode::Bilinear => 0,
        InterpMode::Bicubic => 1,
    });
    match field.noise {
        Some(n) => {
            b.push(1);
            push_f64(&mut b, n.magnitude);
            push_u64(&mut b, n.seed);
        }
        None => {
            b.push(0);
            push_f64(&mut b, 0.0);
            push_u64(&mut b, 0);
        }
    }
    push_u64(&mut b, field.times.len() as u64);
    for &t in &field.times {
        push_f64(&mut b, t);
    }
    for slice in &field.slices {
        for &v in slice {
            push_f64(&mut b, v);
        }
    }
    write_with_checksum(path.as_ref(), b)
}

/// Save a gridded velocity field with a human-readable header; the sample
/// payload stays binary, so round trips are still bit-exact.
pub fn save_gridded_text(field: &GriddedField, path: impl AsRef<Path>) -> Result<()> {
    let mut head = String::new();
    let _ = writeln!(head, "{GRID_TEXT_MAGIC} v{VERSION}");
    let _ = writeln!(head, "# origin {} {}", field.origin.x, field.origin.y);
    let _ = writeln!(head, "# dx {}", field.dx);
    let _ = writeln!(head, "# nodes {} {}", field.nx, field.ny);
    let _ = writeln!(head, "# interp {}", field.interp.as_str());
    if let Some(n) = field.noise {
        let _ = writeln!(head, "# noise {} {}", n.magnitude, n.seed);
    }
    let mut times = String::new();
    for &t in &field.times {
        let _ = write!(times, " {t}");
    }
    let _ = writeln!(head, "# times{times}");
    let _ = writeln!(head, "# end-header");

    let mut b = head.into_bytes();
    for slice in &field.slices {
        for &v in slice {
            push_f64(&mut b, v);
        }
    }
    write_with_checksum(path.as_ref(), b)
}

/// Load a gridded velocity field from either container variant.
pub fn load_gridded(path: impl AsRef<Path>) -> Result<GriddedField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(GRID_MAGIC) {
        load_gridded_binary(&bytes, path)
    } else if bytes.starts_with(GRID_TEXT_MAGIC.as_bytes()) {
        load_gridded_text(&bytes, path)
    } else {
        Err(FtleError::BadMagic {
            path: path.display().to_string(),
        })
    }
}

fn load_gridded_binary(bytes: &[u8], path: &Path) -> Result<GriddedField> {
    let body = checked_body(bytes, GRID_MAGIC.len() + 4, path)?;
    let mut r = ByteReader::new(&body[GRID_MAGIC.len()..], path);
    check_version(r.u32()?, path)?;
    let origin = Vec2::new(r.f64()?, r.f64()?);
    let dx = r.f64()?;
    let nx = r.count("node", 1 << 32)?;
    let ny = r.count("node", 1 << 32)?;
    let interp = match r.u32()? {
        0 => InterpMode::Bilinear,
        1 => InterpMode::Bicubic,
        other => {
            return Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("unknown interpolation code {other}"),
            })
        }
    };
    let has_noise = r.u8()?;
    let magnitude = r.f64()?;
    let seed = r.u64()?;
    let noise = match has_noise {
        0 => None,
        1 => Some(NoiseSpec { magnitude, seed }),
        other => {
            return Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("unknown noise flag {other}"),
            })
        }
    };
    let n_times = r.count("time-slice", 1 << 24)?;
    let mut times = Vec::with_capacity(n_times);
    for _ in 0..n_times {
        times.push(r.f64()?);
    }
    let mut slices = Vec::with_capacity(n_times);
    for _ in 0..n_times {
        let mut slice = Vec::with_capacity(nx * ny * 2);
        for _ in 0..nx * ny * 2 {
            slice.push(r.f64()?);
        }
        slices.push(slice);
    }
    r.finish()?;
    build_gridded(origin, dx, nx, ny, times, slices, interp, noise, path)
}

fn load_gridded_text(bytes: &[u8], path: &Path) -> Result<GriddedField> {
    let body = checked_body(bytes, GRID_TEXT_MAGIC.len(), path)?;
    let header_end = find_subslice(body, b"# end-header\n").ok_or_else(|| FtleError::Malformed {
        path: path.display().to_string(),
        reason: "missing end-header marker".into(),
    })?;
    let header = std::str::from_utf8(&body[..header_end]).map_err(|_| FtleError::Malformed {
        path: path.display().to_string(),
        reason: "header is not valid UTF-8".into(),
    })?;
    let mut lines = header.lines();
    let first = lines.next().unwrap_or("");
    let version = first
        .strip_prefix(GRID_TEXT_MAGIC)
        .and_then(|v| v.trim().strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("bad header line '{first}'"),
        })?;
    check_version(version, path)?;

    let mut origin = None;
    let mut dx = None;
    let mut nodes = None;
    let mut interp = None;
    let mut noise = None;
    let mut times: Option<Vec<f64>> = None;
    for line in lines {
        let Some((key, rest)) = line
            .strip_prefix("# ")
            .map(|l| l.split_once(' ').unwrap_or((l, "")))
        else {
            return Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("unexpected header line '{line}'"),
            });
        };
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let parse = |s: &str| parse_float(s, path, line);
        match key {
            "origin" if fields.len() == 2 => {
                origin = Some(Vec2::new(parse(fields[0])?, parse(fields[1])?));
            }
            "dx" if fields.len() == 1 => dx = Some(parse(fields[0])?),
            "nodes" if fields.len() == 2 => {
                nodes = Some((parse_usize(fields[0], path, line)?, parse_usize(fields[1], path, line)?));
            }
            "interp" if fields.len() == 1 => interp = Some(InterpMode::parse(fields[0])?),
            "noise" if fields.len() == 2 => {
                noise = Some(NoiseSpec {
                    magnitude: parse(fields[0])?,
                    seed: fields[1].parse().map_err(|_| FtleError::Malformed {
                        path: path.display().to_string(),
                        reason: format!("bad seed in '{line}'"),
                    })?,
                });
            }
            "times" => {
                times = Some(fields.iter().map(|f| parse(f)).collect::<Result<_>>()?);
            }
            other => {
                return Err(FtleError::Malformed {
                    path: path.display().to_string(),
                    reason: format!("unknown header key '{other}'"),
                })
            }
        }
    }
    let (origin, dx, (nx, ny), interp, times) = match (origin, dx, nodes, interp, times) {
        (Some(o), Some(d), Some(n), Some(i), Some(t)) => (o, d, n, i, t),
        _ => {
            return Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: "header is missing origin, dx, nodes, interp, or times".into(),
            })
        }
    };

    let payload = &body[header_end + b"# end-header\n".len()..];
    let per_slice = nx * ny * 2;
    if payload.len() != times.len() * per_slice * 8 {
        return Err(FtleError::Truncated {
            path: path.display().to_string(),
        });
    }
    let mut r = ByteReader::new(payload, path);
    let mut slices = Vec::with_capacity(times.len());
    for _ in 0..times.len() {
        let mut slice = Vec::with_capacity(per_slice);
        for _ in 0..per_slice {
            slice.push(r.f64()?);
        }
        slices.push(slice);
    }
    build_gridded(origin, dx, nx, ny, times, slices, interp, noise, path)
}

#[allow(clippy::too_many_arguments)]
fn build_gridded(
    origin: Vec2,
    dx: f64,
    nx: usize,
    ny: usize,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
    interp: InterpMode,
    noise: Option<NoiseSpec>,
    path: &Path,
) -> Result<GriddedField> {
    let mut field = GriddedField::new(origin, dx, nx, ny, times, slices, interp).map_err(|e| {
        FtleError::Malformed {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    })?;
    field.noise = noise;
    Ok(field)
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

// ---------------------------------------------------------------------------
// FTLE fields (binary)

pub fn save_ftle(field: &FtleField, path: impl AsRef<Path>) -> Result<()> {
    let mut b: Vec<u8> = Vec::new();
    b.extend_from_slice(FTLE_MAGIC);
    push_u32(&mut b, VERSION);
    push_f64(&mut b, field.grid.origin.x);
    push_f64(&mut b, field.grid.origin.y);
    push_f64(&mut b, field.grid.dx);
    push_u64(&mut b, field.grid.nx as u64);
    push_u64(&mut b, field.grid.ny as u64);
    push_f64(&mut b, field.t0);
    push_f64(&mut b, field.t1);
    push_u32(&mut b, provenance_code(field.provenance));
    push_f64(&mut b, field.delta_a);
    push_f64(&mut b, field.rtol);
    push_f64(&mut b, field.atol);
    for &v in &field.phi {
        push_f64(&mut b, v);
    }
    for f in &field.flags {
        b.push(f.code());
    }
    write_with_checksum(path.as_ref(), b)
}

pub fn load_ftle(path: impl AsRef<Path>) -> Result<FtleField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if !bytes.starts_with(FTLE_MAGIC) {
        return Err(FtleError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let body = checked_body(&bytes, FTLE_MAGIC.len() + 4, path)?;
    let mut r = ByteReader::new(&body[FTLE_MAGIC.len()..], path);
    check_version(r.u32()?, path)?;
    let origin = Vec2::new(r.f64()?, r.f64()?);
    let dx = r.f64()?;
    let nx = r.count("node", 1 << 32)?;
    let ny = r.count("node", 1 << 32)?;
    let t0 = r.f64()?;
    let t1 = r.f64()?;
    let provenance = provenance_from_code(r.u32()?, path)?;
    let delta_a = r.f64()?;
    let rtol = r.f64()?;
    let atol = r.f64()?;
    let grid = GridSpec::new(origin, dx, nx, ny).map_err(|e| FtleError::Malformed {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut phi = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        phi.push(r.f64()?);
    }
    let mut flags = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        flags.push(NodeFlag::from_code(r.u8()?).map_err(|e| FtleError::Malformed {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?);
    }
    r.finish()?;
    Ok(FtleField {
        grid,
        t0,
        t1,
        phi,
        flags,
        provenance,
        delta_a,
        rtol,
        atol,
    })
}

fn provenance_code(p: FieldProvenance) -> u32 {
    match p {
        FieldProvenance::Numeric(crate::flowmap::GradientMethod::ClusterFd) => 0,
        FieldProvenance::Numeric(crate::flowmap::GradientMethod::AdvectedGradient) => 1,
        FieldProvenance::Analytic => 2,
        FieldProvenance::Imported => 3,
    }
}

fn provenance_from_code(c: u32, path: &Path) -> Result<FieldProvenance> {
    match c {
        0 => Ok(FieldProvenance::Numeric(
            crate::flowmap::GradientMethod::ClusterFd,
        )),
        1 => Ok(FieldProvenance::Numeric(
            crate::flowmap::GradientMethod::AdvectedGradient,
        )),
        2 => Ok(FieldProvenance::Analytic),
        3 => Ok(FieldProvenance::Imported),
        other => Err(FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("unknown provenance code {other}"),
        }),
    }
}

// ---------------------------------------------------------------------------
// FTLE fields (CSV)

/// Export an FTLE field as CSV: one `x,y,phi,flag` row per node, row-major,
/// with the field metadata in `#` header lines. The export re-imports
/// losslessly (shortest round-trip decimals).
pub fn export_ftle_csv(field: &FtleField, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{FTLE_CSV_MAGIC} v{VERSION}");
    let _ = writeln!(s, "# origin {} {}", field.grid.origin.x, field.grid.origin.y);
    let _ = writeln!(s, "# dx {}", field.grid.dx);
    let _ = writeln!(s, "# nodes {} {}", field.grid.nx, field.grid.ny);
    let _ = writeln!(s, "# window {} {}", field.t0, field.t1);
    let _ = writeln!(s, "# provenance {}", field.provenance.as_str());
    let _ = writeln!(s, "# delta-a {}", field.delta_a);
    let _ = writeln!(s, "# tolerances {} {}", field.rtol, field.atol);
    let _ = writeln!(s, "# columns x y phi flag");
    for j in 0..field.grid.ny {
        for i in 0..field.grid.nx {
            let p = field.grid.node(i, j);
            let idx = field.grid.index(i, j);
            let _ = writeln!(
                s,
                "{},{},{},{}",
                p.x,
                p.y,
                field.phi[idx],
                field.flags[idx].code()
            );
        }
    }
    finish_csv(path.as_ref(), s)
}

/// Re-import a CSV export. Positions are taken from the declared grid; the
/// x,y columns are carried for human readers only.
pub fn import_ftle_csv(path: impl AsRef<Path>) -> Result<FtleField> {
    let path = path.as_ref();
    let text = read_checked_csv(path, FTLE_CSV_MAGIC)?;
    let mut header = HeaderMap::default();
    let mut phi = Vec::new();
    let mut flags = Vec::new();
    for line in text.lines().skip(1) {
        if line.starts_with('#') {
            header.add(line, path)?;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("expected 4 columns, got {} in '{line}'", cols.len()),
            });
        }
        phi.push(parse_float(cols[2], path, line)?);
        let code = cols[3].parse::<u8>().map_err(|_| FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("bad flag in '{line}'"),
        })?;
        flags.push(NodeFlag::from_code(code).map_err(|e| FtleError::Malformed {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?);
    }
    let origin = header.vec2("origin", path)?;
    let dx = header.f64("dx", path)?;
    let (nx, ny) = header.usize_pair("nodes", path)?;
    let (t0, t1) = header.f64_pair("window", path)?;
    let provenance = FieldProvenance::parse(&header.get("provenance", path)?)?;
    let delta_a = header.f64("delta-a", path)?;
    let (rtol, atol) = header.f64_pair("tolerances", path)?;
    let grid = GridSpec::new(origin, dx, nx, ny).map_err(|e| FtleError::Malformed {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    if phi.len() != grid.len() {
        return Err(FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("expected {} rows, got {}", grid.len(), phi.len()),
        });
    }
    Ok(FtleField {
        grid,
        t0,
        t1,
        phi,
        flags,
        provenance,
        delta_a,
        rtol,
        atol,
    })
}

// ---------------------------------------------------------------------------
// ridges

/// Save a set of ridges into one CSV artifact.
pub fn save_ridges(ridges: &[Ridge], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{RIDGE_MAGIC} v{VERSION}");
    let _ = writeln!(s, "# count {}", ridges.len());
    for (k, r) in ridges.iter().enumerate() {
        let _ = writeln!(s, "# ridge {k}");
        let _ = writeln!(s, "# state {}", r.state.as_str());
        let _ = writeln!(s, "# seed {} {}", r.seed.x, r.seed.y);
        let _ = writeln!(s, "# stops {} {}", r.stop_start.as_str(), r.stop_end.as_str());
        let _ = writeln!(s, "# from-unrefined {}", u8::from(r.from_unrefined));
        if let Some(sc) = &r.schedule {
            let _ = writeln!(
                s,
                "# schedule {} {} {} {} {}",
                sc.w0, sc.shrink, sc.samples, sc.w_final, sc.max_iterations
            );
        }
        let _ = writeln!(s, "# points {}", r.points.len());
        let _ = writeln!(s, "# columns index s x y phi tangent_x tangent_y frozen");
        for (i, p) in r.points.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{},{},{}",
                p.s,
                p.position.x,
                p.position.y,
                p.phi,
                p.tangent.x,
                p.tangent.y,
                u8::from(p.frozen)
            );
        }
    }
    finish_csv(path.as_ref(), s)
}

pub fn load_ridges(path: impl AsRef<Path>) -> Result<Vec<Ridge>> {
    let path = path.as_ref();
    let text = read_checked_csv(path, RIDGE_MAGIC)?;
    let malformed = |reason: String| FtleError::Malformed {
        path: path.display().to_string(),
        reason,
    };

    let mut ridges: Vec<Ridge> = Vec::new();
    let mut current: Option<Ridge> = None;
    let mut declared: Option<usize> = None;
    for line in text.lines().skip(1) {
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            let fields: Vec<&str> = value.split_whitespace().collect();
            match key {
                "count" => declared = Some(parse_usize(value.trim(), path, line)?),
                "ridge" => {
                    if let Some(r) = current.take() {
                        ridges.push(r);
                    }
                    current = Some(Ridge {
                        points: Vec::new(),
                        state: RidgeState::Tracked,
                        seed: Vec2::zeros(),
                        stop_start: StopReason::DomainExit,
                        stop_end: StopReason::DomainExit,
                        schedule: None,
                        from_unrefined: false,
                    });
                }
                _ => {
                    let r = current
                        .as_mut()
                        .ok_or_else(|| malformed(format!("'{line}' before any ridge header")))?;
                    match key {
                        "state" => r.state = RidgeState::parse(value.trim())?,
                        "seed" if fields.len() == 2 => {
                            r.seed = Vec2::new(
                                parse_float(fields[0], path, line)?,
                                parse_float(fields[1], path, line)?,
                            );
                        }
                        "stops" if fields.len() == 2 => {
                            r.stop_start = StopReason::parse(fields[0])?;
                            r.stop_end = StopReason::parse(fields[1])?;
                        }
                        "from-unrefined" => {
                            r.from_unrefined = parse_bool01(value.trim(), path, line)?;
                        }
                        "schedule" if fields.len() == 5 => {
                            r.schedule = Some(RefinementSchedule {
                                w0: parse_float(fields[0], path, line)?,
                                shrink: parse_float(fields[1], path, line)?,
                                samples: parse_usize(fields[2], path, line)?,
                                w_final: parse_float(fields[3], path, line)?,
                                max_iterations: parse_usize(fields[4], path, line)?,
                            });
                        }
                        "points" | "columns" => {}
                        other => {
                            return Err(malformed(format!("unknown ridge header key '{other}'")))
                        }
                    }
                }
            }
            continue;
        }
        let r = current
            .as_mut()
            .ok_or_else(|| malformed(format!("data row '{line}' before any ridge header")))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(malformed(format!(
                "expected 8 columns, got {} in '{line}'",
                cols.len()
            )));
        }
        let tangent = Vec2::new(
            parse_float(cols[5], path, line)?,
            parse_float(cols[6], path, line)?,
        );
        r.points.push(RidgePoint {
            position: Vec2::new(
                parse_float(cols[2], path, line)?,
                parse_float(cols[3], path, line)?,
            ),
            s: parse_float(cols[1], path, line)?,
            phi: parse_float(cols[4], path, line)?,
            tangent,
            normal: perp(tangent),
            frozen: parse_bool01(cols[7], path, line)?,
        });
    }
    if let Some(r) = current.take() {
        ridges.push(r);
    }
    if let Some(n) = declared {
        if n != ridges.len() {
            return Err(malformed(format!(
                "header declares {n} ridges, file contains {}",
                ridges.len()
            )));
        }
    }
    Ok(ridges)
}

// ---------------------------------------------------------------------------
// classification profiles

pub fn save_profiles(profiles: &[ClassificationProfile], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{PROFILE_MAGIC} v{VERSION}");
    let _ = writeln!(s, "# count {}", profiles.len());
    for (k, p) in profiles.iter().enumerate() {
        let _ = writeln!(s, "# profile {k}");
        let _ = writeln!(s, "# window {} {}", p.t0, p.t1);
        let _ = writeln!(s, "# delta-a {}", p.settings_delta_a);
        let _ = writeln!(s, "# alignment-tolerances {} {}", p.b_tol, p.delta_tol);
        let _ = writeln!(s, "# points {}", p.points.len());
        let _ = writeln!(
            s,
            "# columns s x y phi n_l e_l rho_l sigma_l sign_rho sign_sigma b delta flag \
             rho sigma e_t_x e_t_y zero_shear valid"
        );
        for q in &p.points {
            let m = &q.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                q.s,
                q.position.x,
                q.position.y,
                q.phi,
                m.n_l,
                m.e_l,
                m.rho_l,
                m.sigma_l,
                m.rho_sign,
                m.sigma_sign,
                q.b,
                q.delta,
                q.flag.as_str(),
                m.rho,
                m.sigma,
                m.e_t.x,
                m.e_t.y,
                u8::from(m.zero_shear),
                u8::from(q.valid)
            );
        }
    }
    finish_csv(path.as_ref(), s)
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<ClassificationProfile>> {
    let path = path.as_ref();
    let text = read_checked_csv(path, PROFILE_MAGIC)?;
    let malformed = |reason: String| FtleError::Malformed {
        path: path.display().to_string(),
        reason,
    };

    let mut profiles: Vec<ClassificationProfile> = Vec::new();
    let mut current: Option<ClassificationProfile> = None;
    let mut declared: Option<usize> = None;
    for line in text.lines().skip(1) {
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            let fields: Vec<&str> = value.split_whitespace().collect();
            match key {
                "count" => declared = Some(parse_usize(value.trim(), path, line)?),
                "profile" => {
                    if let Some(p) = current.take() {
                        profiles.push(p);
                    }
                    current = Some(ClassificationProfile {
                        points: Vec::new(),
                        t0: 0.0,
                        t1: 0.0,
                        settings_delta_a: 0.0,
                        b_tol: 0.0,
                        delta_tol: 0.0,
                    });
                }
                _ => {
                    let p = current
                        .as_mut()
                        .ok_or_else(|| malformed(format!("'{line}' before any profile header")))?;
                    match key {
                        "window" if fields.len() == 2 => {
                            p.t0 = parse_float(fields[0], path, line)?;
                            p.t1 = parse_float(fields[1], path, line)?;
                        }
                        "delta-a" => p.settings_delta_a = parse_float(value.trim(), path, line)?,
                        "alignment-tolerances" if fields.len() == 2 => {
                            p.b_tol = parse_float(fields[0], path, line)?;
                            p.delta_tol = parse_float(fields[1], path, line)?;
                        }
                        "points" | "columns" => {}
                        other => {
                            return Err(malformed(format!("unknown profile header key '{other}'")))
                        }
                    }
                }
            }
            continue;
        }
        let p = current
            .as_mut()
            .ok_or_else(|| malformed(format!("data row '{line}' before any profile header")))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 19 {
            return Err(malformed(format!(
                "expected 19 columns, got {} in '{line}'",
                cols.len()
            )));
        }
        let f = |i: usize| parse_float(cols[i], path, line);
        let e_t = Vec2::new(f(15)?, f(16)?);
        p.points.push(ProfilePoint {
            s: f(0)?,
            position: Vec2::new(f(1)?, f(2)?),
            phi: f(3)?,
            metrics: PointClassification {
                n_l: f(4)?,
                e_l: f(5)?,
                rho_l: f(6)?,
                sigma_l: f(7)?,
                rho_sign: parse_i8(cols[8], path, line)?,
                sigma_sign: parse_i8(cols[9], path, line)?,
                rho: f(13)?,
                sigma: f(14)?,
                e_t,
                n_t: perp(e_t),
                zero_shear: parse_bool01(cols[17], path, line)?,
            },
            b: f(10)?,
            delta: f(11)?,
            flag: AlignmentSensitivity::parse(cols[12])?,
            valid: parse_bool01(cols[18], path, line)?,
        });
    }
    if let Some(p) = current.take() {
        profiles.push(p);
    }
    if let Some(n) = declared {
        if n != profiles.len() {
            return Err(malformed(format!(
                "header declares {n} profiles, file contains {}",
                profiles.len()
            )));
        }
    }
    Ok(profiles)
}

// ---------------------------------------------------------------------------
// CSV plumbing

/// Append the checksum comment and write the file.
fn finish_csv(path: &Path, mut s: String) -> Result<()> {
    let sum = digest8(s.as_bytes());
    let _ = writeln!(s, "# checksum {}", hex16(sum));
    fs::write(path, s)?;
    Ok(())
}

/// Read a CSV artifact: verify magic, version, and (when present) the
/// trailing checksum line; return the text without the checksum line.
fn read_checked_csv(path: &Path, magic: &str) -> Result<String> {
    let raw = fs::read(path)?;
    let text = String::from_utf8(raw).map_err(|_| FtleError::Malformed {
        path: path.display().to_string(),
        reason: "file is not valid UTF-8".into(),
    })?;
    if !text.starts_with(magic) {
        return Err(FtleError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let first = text.lines().next().unwrap_or("");
    let version = first
        .strip_prefix(magic)
        .and_then(|v| v.trim().strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("bad header line '{first}'"),
        })?;
    check_version(version, path)?;

    // the checksum line, when present, covers every byte before it
    if let Some(idx) = text.rfind("# checksum ") {
        let tail = text[idx..].trim_end();
        let stated = tail.strip_prefix("# checksum ").unwrap_or("");
        if hex16(digest8(text[..idx].as_bytes())) != stated {
            return Err(FtleError::ChecksumMismatch {
                path: path.display().to_string(),
            });
        }
        return Ok(text[..idx].to_string());
    }
    Ok(text)
}

fn hex16(bytes: [u8; 8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_float(s: &str, path: &Path, line: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| FtleError::Malformed {
        path: path.display().to_string(),
        reason: format!("bad float '{s}' in '{line}'"),
    })
}

fn parse_usize(s: &str, path: &Path, line: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| FtleError::Malformed {
        path: path.display().to_string(),
        reason: format!("bad integer '{s}' in '{line}'"),
    })
}

fn parse_i8(s: &str, path: &Path, line: &str) -> Result<i8> {
    s.parse::<i8>().map_err(|_| FtleError::Malformed {
        path: path.display().to_string(),
        reason: format!("bad sign '{s}' in '{line}'"),
    })
}

fn parse_bool01(s: &str, path: &Path, line: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("expected 0 or 1, got '{s}' in '{line}'"),
        }),
    }
}

/// Header-line accumulator for the FTLE CSV import.
#[derive(Default)]
struct HeaderMap {
    entries: Vec<(String, String)>,
}

impl HeaderMap {
    fn add(&mut self, line: &str, path: &Path) -> Result<()> {
        let rest = line.strip_prefix("# ").ok_or_else(|| FtleError::Malformed {
            path: path.display().to_string(),
            reason: format!("unexpected comment line '{line}'"),
        })?;
        let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    fn get(&self, key: &str, path: &Path) -> Result<String> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("missing header key '{key}'"),
            })
    }

    fn f64(&self, key: &str, path: &Path) -> Result<f64> {
        let v = self.get(key, path)?;
        parse_float(&v, path, key)
    }

    fn pair(&self, key: &str, path: &Path) -> Result<(String, String)> {
        let v = self.get(key, path)?;
        let mut it = v.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => Ok((a.to_string(), b.to_string())),
            _ => Err(FtleError::Malformed {
                path: path.display().to_string(),
                reason: format!("header key '{key}' needs exactly two fields"),
            }),
        }
    }

    fn f64_pair(&self, key: &str, path: &Path) -> Result<(f64, f64)> {
        let (a, b) = self.pair(key, path)?;
        Ok((parse_float(&a, path, key)?, parse_float(&b, path, key)?))
    }

    fn usize_pair(&self, key: &str, path: &Path) -> Result<(usize, usize)> {
        let (a, b) = self.pair(key, path)?;
        Ok((parse_usize(&a, path, key)?, parse_usize(&b, path, key)?))
    }

    fn vec2(&self, key: &str, path: &Path) -> Result<Vec2> {
        let (a, b) = self.f64_pair(key, path)?;
        Ok(Vec2::new(a, b))
    }
}
