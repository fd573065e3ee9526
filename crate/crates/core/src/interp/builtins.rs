//! Library functions and runtime entry points available to interpreted code.

use super::*;
use crate::cfmt::{self, Arg, Want};
use crate::rtformat::{self, CountDump, RangeDump};

fn unescape(body: &[u8], out: &mut Vec<u8>) {
    let mut i = 0;
    while i < body.len() {
        let c = body[i];
        if c != b'\\' || i + 1 >= body.len() {
            out.push(c);
            i += 1;
            continue;
        }
        i += 1;
        let e = body[i];
        i += 1;
        let v = match e {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            b'x' => {
                let mut v: u32 = 0;
                while i < body.len() && body[i].is_ascii_hexdigit() {
                    v = v * 16 + (body[i] as char).to_digit(16).unwrap_or(0);
                    i += 1;
                }
                v as u8
            }
            b'0'..=b'7' => {
                let mut v: u32 = (e - b'0') as u32;
                let mut n = 1;
                while n < 3 && i < body.len() && (b'0'..=b'7').contains(&body[i]) {
                    v = v * 8 + (body[i] - b'0') as u32;
                    i += 1;
                    n += 1;
                }
                v as u8
            }
            other => other,
        };
        out.push(v);
    }
}

/// Bytes of adjacent string literal pieces, without the terminator.
pub(super) fn decode_string(parts: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        let b = p.as_bytes();
        if b.len() >= 2 {
            unescape(&b[1..b.len() - 1], &mut out);
        }
    }
    out
}

pub(super) fn decode_char(lit: &str) -> Option<i64> {
    let b = lit.as_bytes();
    if b.len() < 3 {
        return None;
    }
    let mut out = Vec::new();
    unescape(&b[1..b.len() - 1], &mut out);
    out.first().map(|c| *c as i8 as i64)
}

const MATH1: &[&str] = &[
    "fabs", "sqrt", "exp", "log", "log10", "sin", "cos", "tan", "asin", "acos", "atan", "sinh",
    "cosh", "tanh", "floor", "ceil", "round", "trunc",
];
const MATH2: &[&str] = &["pow", "atan2", "fmod", "fmin", "fmax", "hypot"];

pub(super) fn builtin_return_type(name: &str) -> CType {
    match name {
        n if MATH1.contains(&n) || MATH2.contains(&n) => CType::Double,
        "atof" | "strtod" => CType::Double,
        "atol" | "labs" | "strlen" => CType::LONG,
        "update_range" | "rangeweaver_count" | "rangeweaver_dump_ranges"
        | "rangeweaver_dump_counts" | "exit" | "abort" => CType::Void,
        _ => CType::INT,
    }
}

/// Longest prefix of `s` (after leading spaces) that parses as a number.
fn numeric_prefix(s: &[u8], float: bool) -> &[u8] {
    let start = s.iter().take_while(|c| c.is_ascii_whitespace()).count();
    let s = &s[start..];
    let mut i = 0;
    if matches!(s.first(), Some(b'+') | Some(b'-')) {
        i += 1;
    }
    let digits_from = i;
    while s.get(i).is_some_and(u8::is_ascii_digit) {
        i += 1;
    }
    if !float {
        return if i > digits_from { &s[..i] } else { &s[..0] };
    }
    if s.get(i) == Some(&b'.') {
        i += 1;
        while s.get(i).is_some_and(u8::is_ascii_digit) {
            i += 1;
        }
    }
    if i == digits_from || (i == digits_from + 1 && s.get(digits_from) == Some(&b'.')) {
        return &s[..0];
    }
    if matches!(s.get(i), Some(b'e') | Some(b'E')) {
        let mut j = i + 1;
        if matches!(s.get(j), Some(b'+') | Some(b'-')) {
            j += 1;
        }
        if s.get(j).is_some_and(u8::is_ascii_digit) {
            while s.get(j).is_some_and(u8::is_ascii_digit) {
                j += 1;
            }
            i = j;
        }
    }
    &s[..i]
}

fn ok(v: Val, ty: CType) -> R<Option<Typed>> {
    Ok(Some((RV::S(v), ty)))
}

impl<'a> Interp<'a> {
    fn arg_f64(&self, a: &Typed) -> R<f64> {
        match self.convert(a.0.clone(), &a.1, &CType::Double)? {
            RV::S(Val::Float(f)) => Ok(f),
            _ => Err(self.err_type("numeric argument required")),
        }
    }

    fn arg_i64(&self, a: &Typed) -> R<i64> {
        self.as_int(a.0.clone(), &a.1)
    }

    fn arg_ptr(&self, a: &Typed) -> R<Ptr> {
        match &a.0 {
            RV::S(Val::Ptr(p)) => Ok(*p),
            RV::S(Val::Int(0)) => Ok(Ptr::NULL),
            _ => Err(self.err_type("pointer argument required")),
        }
    }

    pub(super) fn c_string(&self, p: Ptr) -> R<Vec<u8>> {
        if p.is_null() {
            return Err(fault(EXIT_SEGV, format!("{}: null string", self.loc)));
        }
        let obj = self.object(p)?;
        let mut out = Vec::new();
        let mut i = p.idx;
        loop {
            match usize::try_from(i).ok().and_then(|i| obj.get(i)) {
                Some(Val::Int(0)) => return Ok(out),
                Some(Val::Int(c)) => out.push(*c as u8),
                _ => {
                    return Err(fault(
                        EXIT_SEGV,
                        format!("{}: unterminated string", self.loc),
                    ))
                }
            }
            i += 1;
        }
    }

    fn format_args(&self, fmt: Ptr, rest: &[Typed]) -> R<Vec<u8>> {
        let f = self.c_string(fmt)?;
        let mut it = rest.iter();
        let loc = self.loc;
        let mut failure: Option<Trap> = None;
        let res = cfmt::sprintf(&f, &mut |want| {
            let a = it.next().ok_or_else(|| "too few arguments for format".to_string())?;
            let r = match want {
                Want::Str => self.arg_ptr(a).and_then(|p| self.c_string(p)).map(Arg::Str),
                Want::Float => self.arg_f64(a).map(Arg::Float),
                Want::Ptr => self.arg_ptr(a).map(|p| Arg::Int(p.idx)),
                Want::Int | Want::Unsigned | Want::Char => match &a.0 {
                    RV::S(Val::Float(f)) => Ok(Arg::Float(*f)),
                    _ => self.arg_i64(a).map(Arg::Int),
                },
            };
            r.map_err(|t| {
                failure = Some(t);
                "bad argument".to_string()
            })
        });
        if let Some(t) = failure {
            return Err(t);
        }
        res.map_err(|m| {
            Trap::Error(InterpError::Type {
                loc,
                message: format!("printf: {m}"),
            })
        })
    }

    fn write_stream(&mut self, stream: Ptr, bytes: &[u8]) -> R<()> {
        match (stream.space, stream.obj) {
            (Space::Stream, 1) => self.out.stdout.extend_from_slice(bytes),
            (Space::Stream, 2) => self.out.stderr.extend_from_slice(bytes),
            _ => return Err(self.unsupported("write to a stream other than stdout/stderr")),
        }
        Ok(())
    }

    /// Array named `name` as (cells pointer, element type, length).
    fn runtime_array(&mut self, name: &str, len_name: &str) -> R<(Ptr, CType, usize)> {
        let (p, ty) = self
            .globals
            .get(name)
            .cloned()
            .ok_or_else(|| self.err_type(format!("runtime array `{name}` is not defined")))?;
        let len = match self.globals.get(len_name).cloned() {
            Some((lp, _)) => match self.load(lp)? {
                Val::Int(n) => n.max(0) as usize,
                _ => 0,
            },
            None => 0,
        };
        let CType::Array(elem, n) = ty else {
            return Err(self.err_type(format!("`{name}` is not an array")));
        };
        Ok((p, (*elem).clone(), len.min(n)))
    }

    fn dump_ranges(&mut self) -> R<()> {
        let (p, elem, len) = self.runtime_array(rtformat::RANGES_ARRAY, rtformat::RANGES_LEN)?;
        let step = self.cell_count(&elem)? as i64;
        let mut slots = Vec::with_capacity(len);
        for k in 0..len {
            let c = self.cells(p.offset(k as i64 * step), 3)?;
            let slot = match (&c[0], &c[1], &c[2]) {
                (Val::Float(lo), Val::Float(hi), Val::Int(init)) if *init != 0 => Some((*lo, *hi)),
                _ => None,
            };
            slots.push(slot);
        }
        self.out.range_dump = Some(RangeDump { slots }.to_text());
        Ok(())
    }

    fn dump_counts(&mut self) -> R<()> {
        let (p, _, len) = self.runtime_array(rtformat::COUNTS_ARRAY, rtformat::COUNTS_LEN)?;
        let counts = self
            .cells(p, len)?
            .iter()
            .map(|v| match v {
                Val::Int(c) => *c as u64,
                _ => 0,
            })
            .collect();
        self.out.count_dump = Some(CountDump { counts }.to_text());
        Ok(())
    }

    /// Calls a library function; `None` when `name` is not one.
    pub(super) fn builtin_values(&mut self, name: &str, args: Vec<Typed>) -> R<Option<Typed>> {
        let need = |n: usize| -> R<()> {
            if args.len() < n {
                Err(Trap::Error(InterpError::Type {
                    loc: self.loc,
                    message: format!("`{name}` expects {n} arguments"),
                }))
            } else {
                Ok(())
            }
        };
        if MATH1.contains(&name) {
            need(1)?;
            let x = self.arg_f64(&args[0])?;
            let r = match name {
                "fabs" => x.abs(),
                "sqrt" => x.sqrt(),
                "exp" => x.exp(),
                "log" => x.ln(),
                "log10" => x.log10(),
                "sin" => x.sin(),
                "cos" => x.cos(),
                "tan" => x.tan(),
                "asin" => x.asin(),
                "acos" => x.acos(),
                "atan" => x.atan(),
                "sinh" => x.sinh(),
                "cosh" => x.cosh(),
                "tanh" => x.tanh(),
                "floor" => x.floor(),
                "ceil" => x.ceil(),
                "round" => x.round(),
                _ => x.trunc(),
            };
            return ok(Val::Float(r), CType::Double);
        }
        if MATH2.contains(&name) {
            need(2)?;
            let x = self.arg_f64(&args[0])?;
            let y = self.arg_f64(&args[1])?;
            let r = match name {
                "pow" => x.powf(y),
                "atan2" => x.atan2(y),
                "fmod" => x % y,
                "fmin" => x.min(y),
                "fmax" => x.max(y),
                _ => x.hypot(y),
            };
            return ok(Val::Float(r), CType::Double);
        }
        match name {
            "printf" => {
                need(1)?;
                let fmt = self.arg_ptr(&args[0])?;
                let bytes = self.format_args(fmt, &args[1..])?;
                let n = bytes.len() as i64;
                self.out.stdout.extend_from_slice(&bytes);
                ok(Val::Int(n), CType::INT)
            }
            "fprintf" => {
                need(2)?;
                let stream = self.arg_ptr(&args[0])?;
                let fmt = self.arg_ptr(&args[1])?;
                let bytes = self.format_args(fmt, &args[2..])?;
                let n = bytes.len() as i64;
                self.write_stream(stream, &bytes)?;
                ok(Val::Int(n), CType::INT)
            }
            "puts" => {
                need(1)?;
                let mut s = self.c_string(self.arg_ptr(&args[0])?)?;
                s.push(b'\n');
                self.out.stdout.extend_from_slice(&s);
                ok(Val::Int(1), CType::INT)
            }
            "fputs" => {
                need(2)?;
                let s = self.c_string(self.arg_ptr(&args[0])?)?;
                let stream = self.arg_ptr(&args[1])?;
                self.write_stream(stream, &s)?;
                ok(Val::Int(1), CType::INT)
            }
            "putchar" => {
                need(1)?;
                let c = self.arg_i64(&args[0])?;
                self.out.stdout.push(c as u8);
                ok(Val::Int(c & 0xff), CType::INT)
            }
            "fputc" | "putc" => {
                need(2)?;
                let c = self.arg_i64(&args[0])?;
                let stream = self.arg_ptr(&args[1])?;
                self.write_stream(stream, &[c as u8])?;
                ok(Val::Int(c & 0xff), CType::INT)
            }
            "fflush" => ok(Val::Int(0), CType::INT),
            "atoi" | "atol" => {
                need(1)?;
                let s = self.c_string(self.arg_ptr(&args[0])?)?;
                let pre = numeric_prefix(&s, false);
                let v: i64 = std::str::from_utf8(pre)
                    .ok()
                    .and_then(|t| t.parse::<i64>().ok())
                    .unwrap_or(0);
                if name == "atoi" {
                    ok(Val::Int(v as i32 as i64), CType::INT)
                } else {
                    ok(Val::Int(v), CType::LONG)
                }
            }
            "atof" | "strtod" => {
                need(1)?;
                let s = self.c_string(self.arg_ptr(&args[0])?)?;
                if name == "strtod" && args.len() > 1 && !self.arg_ptr(&args[1])?.is_null() {
                    return Err(self.unsupported("strtod with an end pointer"));
                }
                let pre = numeric_prefix(&s, true);
                let v: f64 = std::str::from_utf8(pre)
                    .ok()
                    .and_then(|t| t.parse().ok())
                    .unwrap_or(0.0);
                ok(Val::Float(v), CType::Double)
            }
            "abs" => {
                need(1)?;
                let v = self.arg_i64(&args[0])? as i32;
                ok(Val::Int(v.wrapping_abs() as i64), CType::INT)
            }
            "labs" => {
                need(1)?;
                ok(Val::Int(self.arg_i64(&args[0])?.wrapping_abs()), CType::LONG)
            }
            "strlen" => {
                need(1)?;
                let s = self.c_string(self.arg_ptr(&args[0])?)?;
                ok(Val::Int(s.len() as i64), CType::ULONG)
            }
            "strcmp" => {
                need(2)?;
                let a = self.c_string(self.arg_ptr(&args[0])?)?;
                let b = self.c_string(self.arg_ptr(&args[1])?)?;
                let o = a.cmp(&b) as i64;
                ok(Val::Int(o), CType::INT)
            }
            "exit" => {
                need(1)?;
                let code = self.arg_i64(&args[0])? as i32;
                Err(Trap::Exit(code & 0xff))
            }
            "abort" => Err(fault(EXIT_ABORT, "aborted")),
            n if n == rtformat::UPDATE_FN => {
                need(2)?;
                let p = self.arg_ptr(&args[0])?;
                let v = self.arg_f64(&args[1])?;
                if !v.is_nan() {
                    let c = self.cells_mut(p, 3)?;
                    let fresh = !matches!(c[2], Val::Int(i) if i != 0);
                    let (lo, hi) = match (&c[0], &c[1]) {
                        (Val::Float(lo), Val::Float(hi)) if !fresh => (lo.min(v), hi.max(v)),
                        _ => (v, v),
                    };
                    c[0] = Val::Float(lo);
                    c[1] = Val::Float(hi);
                    c[2] = Val::Int(1);
                }
                Ok(Some((RV::Void, CType::Void)))
            }
            n if n == rtformat::COUNT_FN => {
                need(1)?;
                let p = self.arg_ptr(&args[0])?;
                let c = self.cells_mut(p, 1)?;
                if let Val::Int(v) = &mut c[0] {
                    *v = v.wrapping_add(1);
                }
                Ok(Some((RV::Void, CType::Void)))
            }
            n if n == rtformat::DUMP_RANGES_FN => {
                self.dump_ranges()?;
                Ok(Some((RV::Void, CType::Void)))
            }
            n if n == rtformat::DUMP_COUNTS_FN => {
                self.dump_counts()?;
                Ok(Some((RV::Void, CType::Void)))
            }
            _ => Ok(None),
        }
    }
}
