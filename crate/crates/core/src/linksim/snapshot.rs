//! Bounded CSI snapshot recording and the flat binary trace format.
//!
//! Trace layout, all little-endian: the magic `LMMT`, then version, M, K,
//! blocks and interval in ms as `u32`, then `f64` real/imaginary pairs,
//! sample-major, block-major within a sample, each block an M×K row-major
//! matrix.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrixkit::CMat;

pub const TRACE_MAGIC: [u8; 4] = *b"LMMT";
pub const TRACE_VERSION: u32 = 1;

/// Storage budget for one recording session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiRecorder {
    pub m: usize,
    pub k: usize,
    /// Estimate blocks per snapshot, i.e. sounded subcarriers / K.
    pub blocks: usize,
    pub capacity_bytes: u64,
    /// Stored width of one complex channel coefficient.
    pub bytes_per_entry: u32,
}

impl CsiRecorder {
    /// Storage one co-processor gives to traces: 2 GB for 300 subcarriers,
    /// with 48-bit complex entries (two 24-bit fixed-point halves).
    pub fn coprocessor(m: usize, k: usize, subcarriers: usize) -> Self {
        CsiRecorder {
            m,
            k,
            blocks: subcarriers.div_ceil(k.max(1)),
            capacity_bytes: 2_000_000_000,
            bytes_per_entry: 6,
        }
    }

    pub fn bytes_per_snapshot(&self) -> u64 {
        self.blocks as u64 * self.m as u64 * self.k as u64 * self.bytes_per_entry as u64
    }
}

/// Number of snapshots taken at `interval_ms` within `duration_s`
/// (the first at t = 0, none at all for a zero duration).
pub fn snapshot_count(interval_ms: f64, duration_s: f64) -> Result<usize> {
    if !(interval_ms > 0.0 && interval_ms.is_finite()) || !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "snapshot interval {interval_ms} ms and duration {duration_s} s"
        )));
    }
    // guard against 60/0.005 landing a hair below 12000
    Ok((duration_s * 1e3 / interval_ms + 1e-9).floor() as usize)
}

/// Bytes a trace of the given shape occupies under `rec`'s accounting.
pub fn snapshot_bytes(rec: &CsiRecorder, interval_ms: f64, duration_s: f64) -> Result<u64> {
    Ok(snapshot_count(interval_ms, duration_s)? as u64 * rec.bytes_per_snapshot())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiTrace {
    pub m: usize,
    pub k: usize,
    pub blocks: usize,
    pub interval_ms: f64,
    pub timestamps_ms: Vec<f64>,
    /// One entry per snapshot, each holding `blocks` M×K matrices.
    pub samples: Vec<Vec<CMat>>,
}

impl CsiTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Records CSI from `source` (called with the snapshot time in seconds) every
/// `interval_ms` for `duration_s`, after checking the whole trace fits.
pub fn csi_snapshot(
    rec: &CsiRecorder,
    interval_ms: f64,
    duration_s: f64,
    mut source: impl FnMut(f64) -> Result<Vec<CMat>>,
) -> Result<CsiTrace> {
    let count = snapshot_count(interval_ms, duration_s)?;
    let required = count as u64 * rec.bytes_per_snapshot();
    if required > rec.capacity_bytes {
        return Err(Error::BufferOverrun {
            required,
            capacity: rec.capacity_bytes,
        });
    }
    let mut samples = Vec::with_capacity(count);
    let mut timestamps_ms = Vec::with_capacity(count);
    for i in 0..count {
        let t_ms = i as f64 * interval_ms;
        let blocks = source(t_ms * 1e-3)?;
        if blocks.len() != rec.blocks || blocks.iter().any(|b| b.shape() != (rec.m, rec.k)) {
            return Err(Error::dims(
                format!("{} blocks of {}x{}", rec.blocks, rec.m, rec.k),
                format!("{} blocks", blocks.len()),
            ));
        }
        timestamps_ms.push(t_ms);
        samples.push(blocks);
    }
    Ok(CsiTrace {
        m: rec.m,
        k: rec.k,
        blocks: rec.blocks,
        interval_ms,
        timestamps_ms,
        samples,
    })
}

fn header_u32(name: &str, v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("{name} = {v} does not fit the trace header")))
}

/// Writes `trace`; the interval must be a whole number of milliseconds.
pub fn write_trace<W: Write>(trace: &CsiTrace, mut w: W) -> std::io::Result<()> {
    let interval = trace.interval_ms.round();
    if (trace.interval_ms - interval).abs() > 1e-9 || interval < 0.0 || interval > u32::MAX as f64 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("interval {} ms is not a whole number of ms", trace.interval_ms),
        ));
    }
    let fields = [
        ("M", trace.m),
        ("K", trace.k),
        ("blocks", trace.blocks),
    ]
    .map(|(n, v)| header_u32(n, v));
    w.write_all(&TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    for f in fields {
        let f = f.map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
        w.write_all(&f.to_le_bytes())?;
    }
    w.write_all(&(interval as u32).to_le_bytes())?;
    for sample in &trace.samples {
        for block in sample {
            for z in block.as_slice() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads a trace written by [`write_trace`]. Timestamps are reconstructed
/// from the interval.
pub fn read_trace<R: Read>(mut r: R) -> Result<CsiTrace> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::MalformedTrace(e.to_string()))?;
    if bytes.len() < 24 || bytes[..4] != TRACE_MAGIC {
        return Err(Error::MalformedTrace("missing LMMT header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != TRACE_VERSION {
        return Err(Error::MalformedTrace(format!("unsupported version {version}")));
    }
    let (m, k, blocks, interval) = (word(1) as usize, word(2) as usize, word(3) as usize, word(4));
    let body = &bytes[24..];
    let per_sample = blocks * m * k * 16;
    if per_sample == 0 {
        if !body.is_empty() {
            return Err(Error::MalformedTrace("payload for an empty shape".into()));
        }
    } else if body.len() % per_sample != 0 {
        return Err(Error::MalformedTrace(format!(
            "payload of {} bytes is not a whole number of {per_sample}-byte snapshots",
            body.len()
        )));
    }
    let count = body.len().checked_div(per_sample).unwrap_or(0);
    let f = |off: usize| f64::from_le_bytes(body[off..off + 8].try_into().unwrap());
    let mut samples = Vec::with_capacity(count);
    let mut off = 0;
    for _ in 0..count {
        let mut sample = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            let mut data = Vec::with_capacity(m * k);
            for _ in 0..m * k {
                data.push(C64::new(f(off), f(off + 8)));
                off += 16;
            }
            sample.push(CMat::new(m, k, data).map_err(|e| Error::MalformedTrace(e.to_string()))?);
        }
        samples.push(sample);
    }
    let interval_ms = interval as f64;
    Ok(CsiTrace {
        m,
        k,
        blocks,
        interval_ms,
        timestamps_ms: (0..count).map(|i| i as f64 * interval_ms).collect(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_rayleigh;

    #[test]
    fn two_gigabyte_accounting() {
        // 60 s at 5 ms: 12000 snapshots of 25 blocks × 100 × 12 entries
        let rec = CsiRecorder::coprocessor(100, 12, 300);
        assert_eq!(rec.blocks, 25);
        assert_eq!(snapshot_count(5.0, 60.0).unwrap(), 12_000);
        assert_eq!(snapshot_count(1.0, 12.0).unwrap(), 12_000);
        let bytes = snapshot_bytes(&rec, 5.0, 60.0).unwrap() as f64;
        assert!((bytes / 2e9 - 1.0).abs() < 0.15, "{bytes}");
    }

    #[test]
    fn zero_duration_is_empty() {
        let rec = CsiRecorder::coprocessor(4, 2, 8);
        let t = csi_snapshot(&rec, 5.0, 0.0, |_| unreachable!()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn overrun_detected_before_recording() {
        let mut rec = CsiRecorder::coprocessor(100, 12, 300);
        rec.capacity_bytes = 1_000_000;
        let err = csi_snapshot(&rec, 5.0, 60.0, |_| unreachable!()).unwrap_err();
        assert!(matches!(err, Error::BufferOverrun { .. }));
    }

    #[test]
    fn timestamps_evenly_spaced() {
        let rec = CsiRecorder::coprocessor(2, 1, 3);
        let t = csi_snapshot(&rec, 5.0, 0.1, |_| Ok(vec![CMat::zeros(2, 1); 3])).unwrap();
        assert_eq!(t.len(), 20);
        for w in t.timestamps_ms.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_round_trip() {
        let rec = CsiRecorder::coprocessor(3, 2, 4);
        let mut seed = 0;
        let trace = csi_snapshot(&rec, 1.0, 0.004, |_| {
            seed += 1;
            Ok((0..2).map(|b| draw_rayleigh(3, 2, seed * 10 + b)).collect())
        })
        .unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"LMMT");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(buf.len(), 24 + 4 * 2 * 3 * 2 * 16);
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn trace_rejects_garbage() {
        assert!(read_trace(&b"XXXX"[..]).is_err());
        let rec = CsiRecorder::coprocessor(1, 1, 1);
        let trace = csi_snapshot(&rec, 1.0, 0.002, |_| Ok(vec![CMat::identity(1)])).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        buf.pop();
        assert!(read_trace(buf.as_slice()).is_err());
    }
}
