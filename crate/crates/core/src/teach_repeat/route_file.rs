//! Binary `.route` container.
//!
//! ```text
//! magic "BNRT" | version u16 | section count u32
//! section*: tag [u8; 4] | payload length u32 | payload | crc32(payload) u32
//! ```
//!
//! Sections are `HEAD` (start pose, camera, navigator config, metadata),
//! `PROF` (path profile) and one `MAP ` per local map, in distance order. All
//! integers and floats are little-endian; floats are stored bit-exact.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{LocalMap, RouteMetadata, TaughtRoute};
use crate::types::{MapSelection, NavigatorConfig, PathProfile, Pose, ProfileEntry, SteeringMode, Velocity};
use crate::vision::{CameraModel, Descriptor, Observation};

pub const MAGIC: &[u8; 4] = b"BNRT";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum RouteFileError {
    #[error("route file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a route file: {0}")]
    Format(String),
    #[error("unsupported route file version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("route file truncated in {section}")]
    Truncated { section: String },
    #[error("checksum mismatch in section {section}")]
    Checksum { section: String },
    #[error("invalid content in section {section}: {reason}")]
    Content { section: String, reason: String },
}

struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'a str,
}

impl<'a> Dec<'a> {
    fn new(buf: &'a [u8], section: &'a str) -> Self {
        Self { buf, pos: 0, section }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], RouteFileError> {
        if self.buf.len() - self.pos < n {
            return Err(RouteFileError::Truncated {
                section: self.section.to_string(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, RouteFileError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, RouteFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, RouteFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, RouteFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64, RouteFileError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, RouteFileError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn str(&mut self) -> Result<String, RouteFileError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| self.bad(e.to_string()))
    }
    fn bad(&self, reason: impl Into<String>) -> RouteFileError {
        RouteFileError::Content {
            section: self.section.to_string(),
            reason: reason.into(),
        }
    }
    fn finish(&self) -> Result<(), RouteFileError> {
        if self.pos != self.buf.len() {
            return Err(self.bad(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
}

fn steering_code(s: SteeringMode) -> u8 {
    match s {
        SteeringMode::Combined => 0,
        SteeringMode::ProfileOnly => 1,
        SteeringMode::VisionOnly => 2,
    }
}

fn selection_code(s: MapSelection) -> u8 {
    match s {
        MapSelection::AtOrBelow => 0,
        MapSelection::Nearest => 1,
    }
}

fn encode_head(m: &RouteMetadata) -> Vec<u8> {
    let mut e = Enc(Vec::new());
    e.f64(m.start.x);
    e.f64(m.start.y);
    e.f64(m.start.theta);
    e.f64(m.camera.h_fov);
    e.u32(m.camera.image_width);
    let c = &m.config;
    e.f64(c.alpha);
    e.f64(c.map_spacing);
    e.f64(c.histogram_bin_width);
    e.u32(c.min_matches as u32);
    e.f64(c.max_angular_rate);
    e.u32(c.max_hamming);
    e.u8(steering_code(c.steering));
    e.u8(selection_code(c.map_selection));
    match m.world_seed {
        Some(s) => {
            e.u8(1);
            e.u64(s);
        }
        None => {
            e.u8(0);
            e.u64(0);
        }
    }
    e.u32(m.descriptor_bits);
    e.str(&m.plan_name);
    e.0
}

fn decode_head(buf: &[u8]) -> Result<RouteMetadata, RouteFileError> {
    let mut d = Dec::new(buf, "HEAD");
    let start = Pose {
        x: d.f64()?,
        y: d.f64()?,
        theta: d.f64()?,
    };
    let camera = CameraModel {
        h_fov: d.f64()?,
        image_width: d.u32()?,
    };
    let alpha = d.f64()?;
    let map_spacing = d.f64()?;
    let histogram_bin_width = d.f64()?;
    let min_matches = d.u32()? as usize;
    let max_angular_rate = d.f64()?;
    let max_hamming = d.u32()?;
    let steering = match d.u8()? {
        0 => SteeringMode::Combined,
        1 => SteeringMode::ProfileOnly,
        2 => SteeringMode::VisionOnly,
        x => return Err(d.bad(format!("unknown steering mode {x}"))),
    };
    let map_selection = match d.u8()? {
        0 => MapSelection::AtOrBelow,
        1 => MapSelection::Nearest,
        x => return Err(d.bad(format!("unknown map selection {x}"))),
    };
    let has_seed = d.u8()?;
    let seed = d.u64()?;
    let descriptor_bits = d.u32()?;
    let plan_name = d.str()?;
    d.finish()?;
    Ok(RouteMetadata {
        start,
        camera,
        config: NavigatorConfig {
            alpha,
            map_spacing,
            histogram_bin_width,
            min_matches,
            max_angular_rate,
            max_hamming,
            steering,
            map_selection,
        },
        world_seed: (has_seed == 1).then_some(seed),
        descriptor_bits,
        plan_name,
    })
}

fn encode_profile(p: &PathProfile) -> Vec<u8> {
    let mut e = Enc(Vec::new());
    e.f64(p.total_length());
    e.u32(p.entries().len() as u32);
    for en in p.entries() {
        e.f64(en.d);
        e.f64(en.velocity.v);
        e.f64(en.velocity.omega);
    }
    e.0
}

fn decode_profile(buf: &[u8]) -> Result<PathProfile, RouteFileError> {
    let mut d = Dec::new(buf, "PROF");
    let total = d.f64()?;
    let n = d.u32()? as usize;
    let mut entries = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let dd = d.f64()?;
        let v = d.f64()?;
        let w = d.f64()?;
        entries.push(ProfileEntry {
            d: dd,
            velocity: Velocity::new(v, w),
        });
    }
    d.finish()?;
    PathProfile::new(entries, total).map_err(|e| d.bad(e.to_string()))
}

fn encode_map(m: &LocalMap) -> Vec<u8> {
    let mut e = Enc(Vec::new());
    e.f64(m.d);
    e.u32(m.observations.len() as u32);
    for o in &m.observations {
        e.f64(o.u);
        e.i64(o.landmark_id);
        let words = o.descriptor.words();
        e.u16(words.len() as u16);
        for &w in words {
            e.u64(w);
        }
    }
    e.0
}

fn decode_map(buf: &[u8], name: &str) -> Result<LocalMap, RouteFileError> {
    let mut d = Dec::new(buf, name);
    let dist = d.f64()?;
    let n = d.u32()? as usize;
    let mut observations = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let u = d.f64()?;
        let landmark_id = d.i64()?;
        let nw = d.u16()? as usize;
        let mut words = Vec::with_capacity(nw);
        for _ in 0..nw {
            words.push(d.u64()?);
        }
        observations.push(Observation {
            u,
            descriptor: Descriptor::from_words(words),
            landmark_id,
        });
    }
    d.finish()?;
    Ok(LocalMap { d: dist, observations })
}

/// Serialises a route into the binary container.
pub fn encode_route(route: &TaughtRoute) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(2 + route.maps.len() as u32).to_le_bytes());
    section(&mut out, b"HEAD", &encode_head(&route.metadata));
    section(&mut out, b"PROF", &encode_profile(&route.profile));
    for m in &route.maps {
        section(&mut out, b"MAP ", &encode_map(m));
    }
    out
}

pub fn decode_route(bytes: &[u8]) -> Result<TaughtRoute, RouteFileError> {
    if bytes.is_empty() {
        return Err(RouteFileError::Format("empty file".into()));
    }
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(RouteFileError::Format("bad magic".into()));
    }
    let mut d = Dec::new(bytes, "file header");
    d.take(4)?;
    let version = d.u16()?;
    if version != VERSION {
        return Err(RouteFileError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let count = d.u32()? as usize;
    if count < 2 {
        return Err(RouteFileError::Format(format!(
            "expected at least 2 sections, found {count}"
        )));
    }

    let mut head = None;
    let mut profile = None;
    let mut maps = Vec::new();
    for i in 0..count {
        let name = match i {
            0 => "HEAD".to_string(),
            1 => "PROF".to_string(),
            k => format!("MAP {}", k - 2),
        };
        let mut sd = Dec::new(bytes, &name);
        sd.pos = d.pos;
        let tag: [u8; 4] = sd.take(4)?.try_into().unwrap();
        let len = sd.u32()? as usize;
        let payload = sd.take(len)?;
        let crc = sd.u32()?;
        d.pos = sd.pos;
        let expected_tag: &[u8; 4] = match i {
            0 => b"HEAD",
            1 => b"PROF",
            _ => b"MAP ",
        };
        if &tag != expected_tag {
            return Err(RouteFileError::Format(format!(
                "section {i}: expected tag {:?}, found {:?}",
                String::from_utf8_lossy(expected_tag),
                String::from_utf8_lossy(&tag)
            )));
        }
        if crc32fast::hash(payload) != crc {
            return Err(RouteFileError::Checksum { section: name });
        }
        match i {
            0 => head = Some(decode_head(payload)?),
            1 => profile = Some(decode_profile(payload)?),
            _ => maps.push(decode_map(payload, &name)?),
        }
    }
    if d.pos != bytes.len() {
        return Err(RouteFileError::Format(format!(
            "{} trailing bytes",
            bytes.len() - d.pos
        )));
    }
    Ok(TaughtRoute {
        profile: profile.expect("section 1 decoded"),
        maps,
        metadata: head.expect("section 0 decoded"),
    })
}

pub fn save_route(route: &TaughtRoute, path: &Path) -> Result<(), RouteFileError> {
    crate::io::write_atomic(path, &encode_route(route))?;
    Ok(())
}

pub fn load_route(path: &Path) -> Result<TaughtRoute, RouteFileError> {
    decode_route(&fs::read(path)?)
}
