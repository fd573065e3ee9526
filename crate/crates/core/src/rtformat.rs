//! On-disk formats shared with the C runtime: range dumps, frequency dumps,
//! and the `rangeweaver_rt.h` header the instrumented sources include.

use std::fmt::Write as _;

use crate::cfmt::g17;

pub const RANGE_HEADER: &str = "#rangeweaver v1";
pub const FREQ_HEADER: &str = "#rangeweaver-freq v1";
pub const OUT_ENV: &str = "RANGEWEAVER_OUT";
pub const DEFAULT_OUT: &str = "ranges.out";
pub const HEADER_FILE: &str = "rangeweaver_rt.h";

/// Name of the global range array and its length variable.
pub const RANGES_ARRAY: &str = "ranges";
pub const RANGES_LEN: &str = "rangeweaver_nslots";
pub const COUNTS_ARRAY: &str = "rangeweaver_counts";
pub const COUNTS_LEN: &str = "rangeweaver_ncounts";
pub const UPDATE_FN: &str = "update_range";
pub const COUNT_FN: &str = "rangeweaver_count";
pub const DUMP_RANGES_FN: &str = "rangeweaver_dump_ranges";
pub const DUMP_COUNTS_FN: &str = "rangeweaver_dump_counts";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing `{0}` header")]
    MissingHeader(&'static str),
}

fn malformed(line: usize, message: impl Into<String>) -> DumpError {
    DumpError::Malformed {
        line,
        message: message.into(),
    }
}

/// Per-slot ranges observed by one run; `None` marks an untouched slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RangeDump {
    pub slots: Vec<Option<(f64, f64)>>,
}

impl RangeDump {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 + self.slots.len() * 40);
        s.push_str(RANGE_HEADER);
        s.push('\n');
        for (k, slot) in self.slots.iter().enumerate() {
            match slot {
                Some((lo, hi)) => {
                    let _ = writeln!(s, "{k}\t{}\t{}", g17(*lo), g17(*hi));
                }
                None => {
                    let _ = writeln!(s, "{k}\tEMPTY");
                }
            }
        }
        s
    }

    /// Slots must appear in order starting at 0.
    pub fn parse(text: &str) -> Result<Self, DumpError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == RANGE_HEADER => {}
            _ => return Err(DumpError::MissingHeader(RANGE_HEADER)),
        }
        let mut slots = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let k: usize = parts
                .next()
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| malformed(n, "bad slot index"))?;
            if k != slots.len() {
                return Err(malformed(n, format!("expected slot {}, found {k}", slots.len())));
            }
            let rest: Vec<&str> = parts.collect();
            match rest.as_slice() {
                ["EMPTY"] => slots.push(None),
                [lo, hi] => {
                    let lo: f64 = lo.parse().map_err(|_| malformed(n, "bad minimum"))?;
                    let hi: f64 = hi.parse().map_err(|_| malformed(n, "bad maximum"))?;
                    if lo.is_nan() || hi.is_nan() || lo > hi {
                        return Err(malformed(n, "minimum exceeds maximum"));
                    }
                    slots.push(Some((lo, hi)));
                }
                _ => return Err(malformed(n, "expected `K<TAB>min<TAB>max` or `K<TAB>EMPTY`")),
            }
        }
        Ok(RangeDump { slots })
    }
}

/// Per-slot execution counts from the frequency profiling mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountDump {
    pub counts: Vec<u64>,
}

impl CountDump {
    pub fn to_text(&self) -> String {
        let mut s = String::from(FREQ_HEADER);
        s.push('\n');
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{k}\t{c}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, DumpError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == FREQ_HEADER => {}
            _ => return Err(DumpError::MissingHeader(FREQ_HEADER)),
        }
        let mut counts = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let (k, c) = line
                .split_once('\t')
                .ok_or_else(|| malformed(n, "expected `K<TAB>count`"))?;
            let k: usize = k.parse().map_err(|_| malformed(n, "bad slot index"))?;
            if k != counts.len() {
                return Err(malformed(n, format!("expected slot {}, found {k}", counts.len())));
            }
            counts.push(c.trim().parse().map_err(|_| malformed(n, "bad count"))?);
        }
        Ok(CountDump { counts })
    }
}

/// Text of `rangeweaver_rt.h`.
pub fn runtime_header() -> String {
    format!(
        "#ifndef RANGEWEAVER_RT_H
#define RANGEWEAVER_RT_H

#include <stdlib.h>

typedef struct {{
    double min;
    double max;
    int initialized;
}} Range;

extern Range {RANGES_ARRAY}[];
extern int {RANGES_LEN};
extern unsigned long {COUNTS_ARRAY}[];
extern int {COUNTS_LEN};

/* Widens `range` to include `value`; NaN is ignored. */
void {UPDATE_FN}(Range *range, double value);
void {COUNT_FN}(unsigned long *counter);

/* Write `{RANGES_LEN}` ranges (or counters) to ${OUT_ENV}, default \"{DEFAULT_OUT}\". */
void {DUMP_RANGES_FN}(void);
void {DUMP_COUNTS_FN}(void);

#endif
"
    )
}
