//! Line-based extension-spec files and the boundary-condition mini-language.
//!
//! ```text
//! # comment
//! example=ode
//! a11=1.5-2i
//! a12=0
//! a21=0
//! a22=-i
//! n=200
//! task=verify
//! ```

use serde::Serialize;
use thiserror::Error;

use crate::ode::OdeParams;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Syntax,
    Encoding,
    UnknownKey,
    DuplicateKey,
    MissingKey,
    WrongParams,
    OutOfRange,
    UnknownToken,
    Nonlinear,
    EmptySide,
    Inhomogeneous,
    AllZero,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err(kind: ErrorKind, line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        line,
        column,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Ode,
    CauchyRiemann,
}

impl Example {
    pub fn as_str(&self) -> &'static str {
        match self {
            Example::Ode => "ode",
            Example::CauchyRiemann => "cauchy-riemann",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Params {
    Ode(OdeParams),
    CauchyRiemann(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Verify,
    Sweep,
    Spectrum,
    SolveSystem,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Verify, Task::Sweep, Task::Spectrum, Task::SolveSystem];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Verify => "verify",
            Task::Sweep => "sweep",
            Task::Spectrum => "spectrum",
            Task::SolveSystem => "solve-system",
        }
    }
}

pub const NODES_RANGE: std::ops::RangeInclusive<usize> = 8..=4096;
pub const MODES_RANGE: std::ops::RangeInclusive<usize> = 4..=64;

#[derive(Clone, Debug, PartialEq)]
pub struct SpecDocument {
    pub example: Example,
    pub params: Params,
    /// `n` (grid nodes) for the interval, `M` (mode truncation) for the square.
    pub resolution: usize,
    pub tasks: Vec<Task>,
    pub tol_analytic: Option<f64>,
    pub tol_quadrature: Option<f64>,
}

const KEYS: [&str; 11] = [
    "example",
    "a11",
    "a12",
    "a21",
    "a22",
    "a",
    "n",
    "M",
    "task",
    "tol_analytic",
    "tol_quadrature",
];

struct Cursor<'a> {
    chars: &'a [char],
    pos: usize,
    line: usize,
    col0: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn column(&self) -> usize {
        self.col0 + self.pos
    }

    fn fail(&self, message: impl Into<String>) -> ParseError {
        err(ErrorKind::Syntax, self.line, self.column(), message)
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let mut digits = 0;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
            digits += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.fail("expected a number"));
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let mut exp_digits = 0;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
                exp_digits += 1;
            }
            if exp_digits == 0 {
                self.pos = save;
                return Err(self.fail("malformed exponent"));
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let v: f64 = text.parse().map_err(|_| {
            err(ErrorKind::Syntax, self.line, self.col0 + start, "malformed number")
        })?;
        if !v.is_finite() {
            return Err(err(
                ErrorKind::OutOfRange,
                self.line,
                self.col0 + start,
                "number overflows",
            ));
        }
        Ok(v)
    }

    fn sign(&mut self) -> Option<f64> {
        match self.peek() {
            Some('+') => {
                self.pos += 1;
                Some(1.0)
            }
            Some('-') => {
                self.pos += 1;
                Some(-1.0)
            }
            _ => None,
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }
}

fn parse_complex_at(chars: &[char], line: usize, col0: usize) -> Result<C64, ParseError> {
    let mut cur = Cursor {
        chars,
        pos: 0,
        line,
        col0,
    };
    cur.skip_ws();
    if cur.at_end() {
        return Err(cur.fail("empty value"));
    }
    let s1 = cur.sign().unwrap_or(1.0);
    cur.skip_ws();
    if cur.peek() == Some('i') {
        cur.pos += 1;
        if !cur.at_end() {
            return Err(cur.fail("unexpected text after imaginary unit"));
        }
        return Ok(C64::new(0.0, s1));
    }
    let x = s1 * cur.number()?;
    cur.skip_ws();
    match cur.peek() {
        None => Ok(C64::new(x, 0.0)),
        Some('i') => {
            cur.pos += 1;
            if !cur.at_end() {
                return Err(cur.fail("unexpected text after imaginary unit"));
            }
            Ok(C64::new(0.0, x))
        }
        Some('+') | Some('-') => {
            let s2 = cur.sign().expect("sign");
            cur.skip_ws();
            if cur.peek().is_none() {
                return Err(cur.fail("dangling operator"));
            }
            let y = if cur.peek() == Some('i') {
                s2
            } else {
                let y = s2 * cur.number()?;
                cur.skip_ws();
                if cur.peek() != Some('i') {
                    return Err(cur.fail("expected imaginary unit 'i'"));
                }
                y
            };
            cur.pos += 1;
            if !cur.at_end() {
                return Err(cur.fail("unexpected text after imaginary unit"));
            }
            Ok(C64::new(x, y))
        }
        Some(_) => Err(cur.fail("unexpected character in complex literal")),
    }
}

/// Parses `1.5-2i`, `i`, `-i`, `2e-3`, `-0.0866i`, ...
pub fn parse_complex(text: &str) -> Result<C64, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    parse_complex_at(&chars, 1, 1)
}

fn parse_positive_real(chars: &[char], line: usize, col0: usize) -> Result<f64, ParseError> {
    let z = parse_complex_at(chars, line, col0)?;
    if z.im != 0.0 || !(z.re > 0.0) {
        return Err(err(ErrorKind::OutOfRange, line, col0, "tolerance must be a positive real"));
    }
    Ok(z.re)
}

fn parse_count(
    chars: &[char],
    line: usize,
    col0: usize,
    range: &std::ops::RangeInclusive<usize>,
) -> Result<usize, ParseError> {
    let text: String = chars.iter().collect();
    let t = text.trim();
    let lead = text.len() - text.trim_start().len();
    if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit()) {
        return Err(err(ErrorKind::Syntax, line, col0 + lead, "expected a positive integer"));
    }
    let v: usize = t
        .parse()
        .map_err(|_| err(ErrorKind::OutOfRange, line, col0 + lead, "integer overflows"))?;
    if !range.contains(&v) {
        return Err(err(
            ErrorKind::OutOfRange,
            line,
            col0 + lead,
            format!("{v} outside the supported range {}..={}", range.start(), range.end()),
        ));
    }
    Ok(v)
}

struct Entry {
    line: usize,
    column: usize,
    value: C64,
}

/// Parses raw bytes, reporting invalid UTF-8 with its position.
pub fn parse_spec_bytes(bytes: &[u8]) -> Result<SpecDocument, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse_spec(s),
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let line = 1 + good.iter().filter(|&&b| b == b'\n').count();
            let tail = match good.iter().rposition(|&b| b == b'\n') {
                Some(p) => &good[p + 1..],
                None => good,
            };
            let column = 1 + String::from_utf8_lossy(tail).chars().count();
            Err(err(ErrorKind::Encoding, line, column, "invalid UTF-8"))
        }
    }
}

pub fn parse_spec(text: &str) -> Result<SpecDocument, ParseError> {
    let mut example: Option<(Example, usize)> = None;
    let mut coeffs: [Option<Entry>; 5] = [None, None, None, None, None];
    let mut nodes: Option<(usize, usize, usize)> = None;
    let mut modes: Option<(usize, usize, usize)> = None;
    let mut tasks = Vec::new();
    let mut tol_a = None;
    let mut tol_q = None;
    let mut last_line = 1;

    for (idx, raw) in text.split('\n').enumerate() {
        let line = idx + 1;
        last_line = line;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let chars: Vec<char> = raw.chars().collect();
        let end = chars.iter().position(|&c| c == '#').unwrap_or(chars.len());
        let body = &chars[..end];
        if body.iter().all(|c| c.is_whitespace()) {
            continue;
        }
        let eq = body.iter().position(|&c| c == '=').ok_or_else(|| {
            let first = body.iter().position(|c| !c.is_whitespace()).unwrap_or(0);
            err(ErrorKind::Syntax, line, first + 1, "expected key=value")
        })?;
        let key_start = body.iter().position(|c| !c.is_whitespace()).unwrap_or(0);
        let key: String = body[..eq].iter().collect::<String>().trim().to_string();
        if key.is_empty() {
            return Err(err(ErrorKind::Syntax, line, eq + 1, "missing key before '='"));
        }
        if !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(ErrorKind::Syntax, line, key_start + 1, format!("malformed key '{key}'")));
        }
        let vchars = &body[eq + 1..];
        let vcol = eq + 2;
        let dup = || err(ErrorKind::DuplicateKey, line, key_start + 1, format!("duplicate key '{key}'"));
        match key.as_str() {
            "example" => {
                if example.is_some() {
                    return Err(dup());
                }
                let v: String = vchars.iter().collect();
                let ex = match v.trim() {
                    "ode" => Example::Ode,
                    "cauchy-riemann" => Example::CauchyRiemann,
                    other => {
                        return Err(err(
                            ErrorKind::Syntax,
                            line,
                            vcol,
                            format!("unknown example '{other}'"),
                        ))
                    }
                };
                example = Some((ex, line));
            }
            "a11" | "a12" | "a21" | "a22" | "a" => {
                let slot = ["a11", "a12", "a21", "a22", "a"]
                    .iter()
                    .position(|k| *k == key)
                    .expect("listed key");
                if coeffs[slot].is_some() {
                    return Err(dup());
                }
                let value = parse_complex_at(vchars, line, vcol)?;
                coeffs[slot] = Some(Entry {
                    line,
                    column: key_start + 1,
                    value,
                });
            }
            "n" => {
                if nodes.is_some() {
                    return Err(dup());
                }
                nodes = Some((parse_count(vchars, line, vcol, &NODES_RANGE)?, line, key_start + 1));
            }
            "M" => {
                if modes.is_some() {
                    return Err(dup());
                }
                modes = Some((parse_count(vchars, line, vcol, &MODES_RANGE)?, line, key_start + 1));
            }
            "task" => {
                let v: String = vchars.iter().collect();
                let t = Task::ALL
                    .iter()
                    .find(|t| t.as_str() == v.trim())
                    .ok_or_else(|| err(ErrorKind::Syntax, line, vcol, format!("unknown task '{}'", v.trim())))?;
                tasks.push(*t);
            }
            "tol_analytic" => {
                if tol_a.is_some() {
                    return Err(dup());
                }
                tol_a = Some(parse_positive_real(vchars, line, vcol)?);
            }
            "tol_quadrature" => {
                if tol_q.is_some() {
                    return Err(dup());
                }
                tol_q = Some(parse_positive_real(vchars, line, vcol)?);
            }
            _ => {
                return Err(err(
                    ErrorKind::UnknownKey,
                    line,
                    key_start + 1,
                    format!("unknown key '{key}' (expected one of {})", KEYS.join(", ")),
                ))
            }
        }
    }

    let missing = |what: &str| err(ErrorKind::MissingKey, last_line, 1, format!("missing required key '{what}'"));
    let (example, _) = example.ok_or_else(|| missing("example"))?;
    let wrong = |e: &Entry, k: &str| {
        err(
            ErrorKind::WrongParams,
            e.line,
            e.column,
            format!("key '{k}' does not belong to example '{}'", example.as_str()),
        )
    };
    let (params, resolution) = match example {
        Example::Ode => {
            if let Some(e) = &coeffs[4] {
                return Err(wrong(e, "a"));
            }
            if let Some((_, l, c)) = modes {
                return Err(err(ErrorKind::WrongParams, l, c, "key 'M' does not belong to example 'ode'"));
            }
            let mut a = [C64::new(0.0, 0.0); 4];
            for (k, name) in ["a11", "a12", "a21", "a22"].iter().enumerate() {
                a[k] = coeffs[k].as_ref().ok_or_else(|| missing(name))?.value;
            }
            let (n, _, _) = nodes.ok_or_else(|| missing("n"))?;
            (Params::Ode(OdeParams::from_array(a)), n)
        }
        Example::CauchyRiemann => {
            for (k, name) in ["a11", "a12", "a21", "a22"].iter().enumerate() {
                if let Some(e) = &coeffs[k] {
                    return Err(wrong(e, name));
                }
            }
            if let Some((_, l, c)) = nodes {
                return Err(err(
                    ErrorKind::WrongParams,
                    l,
                    c,
                    "key 'n' does not belong to example 'cauchy-riemann'",
                ));
            }
            let a = coeffs[4].as_ref().ok_or_else(|| missing("a"))?.value;
            let (m, _, _) = modes.ok_or_else(|| missing("M"))?;
            (Params::CauchyRiemann(a), m)
        }
    };
    if tasks.is_empty() {
        return Err(missing("task"));
    }
    Ok(SpecDocument {
        example,
        params,
        resolution,
        tasks,
        tol_analytic: tol_a,
        tol_quadrature: tol_q,
    })
}

/// 17 significant digits, exact round trip.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `re±imi` with the sign bit of the imaginary part preserved.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
}

impl SpecDocument {
    /// Canonical text: keys in fixed order, bit-exact floats, LF endings.
    pub fn to_text(&self) -> String {
        let mut out = format!("example={}\n", self.example.as_str());
        match self.params {
            Params::Ode(a) => {
                for (k, v) in ["a11", "a12", "a21", "a22"].iter().zip(a.as_array()) {
                    out.push_str(&format!("{k}={}\n", format_complex(v)));
                }
                out.push_str(&format!("n={}\n", self.resolution));
            }
            Params::CauchyRiemann(a) => {
                out.push_str(&format!("a={}\n", format_complex(a)));
                out.push_str(&format!("M={}\n", self.resolution));
            }
        }
        for t in &self.tasks {
            out.push_str(&format!("task={}\n", t.as_str()));
        }
        if let Some(t) = self.tol_analytic {
            out.push_str(&format!("tol_analytic={}\n", format_real(t)));
        }
        if let Some(t) = self.tol_quadrature {
            out.push_str(&format!("tol_quadrature={}\n", format_real(t)));
        }
        out
    }
}

/// Serialize then parse.
pub fn round_trip(doc: &SpecDocument) -> Result<SpecDocument, ParseError> {
    parse_spec(&doc.to_text())
}

/// A homogeneous linear condition on `(y(0), y(1), y'(0), y'(1))`,
/// normalized so that the first nonzero coefficient is 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryForm {
    pub coeffs: [C64; 4],
}

const BOUNDARY_TOKENS: [&str; 4] = ["y(0)", "y(1)", "y'(0)", "y'(1)"];

impl BoundaryForm {
    pub fn to_text(&self) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .zip(BOUNDARY_TOKENS)
            .filter(|(c, _)| **c != C64::new(0.0, 0.0))
            .map(|(c, t)| format!("({})*{t}", format_complex(*c)))
            .collect();
        format!("{}=0", terms.join("+"))
    }
}

#[derive(Clone, Copy, Debug)]
struct Linear {
    y: [C64; 4],
    k: C64,
}

impl Linear {
    fn konst(k: C64) -> Self {
        Linear {
            y: [C64::new(0.0, 0.0); 4],
            k,
        }
    }

    fn has_y(&self) -> bool {
        self.y.iter().any(|v| *v != C64::new(0.0, 0.0))
    }

    fn add(self, o: Linear, s: f64) -> Linear {
        let mut y = self.y;
        for j in 0..4 {
            y[j] += o.y[j] * s;
        }
        Linear { y, k: self.k + o.k * s }
    }

    fn scale(self, c: C64) -> Linear {
        Linear {
            y: self.y.map(|v| v * c),
            k: self.k * c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Tok {
    Num(C64),
    Y(usize),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(chars: &[char]) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = i + 1;
        if ch == ' ' || ch == '\t' {
            i += 1;
            continue;
        }
        let simple = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, col));
            i += 1;
            continue;
        }
        if ch == 'y' {
            let rest: String = chars[i..chars.len().min(i + 5)].iter().collect();
            if let Some(j) = BOUNDARY_TOKENS.iter().position(|t| rest.starts_with(t)) {
                out.push((Tok::Y(j), col));
                i += BOUNDARY_TOKENS[j].len();
                continue;
            }
            return Err(err(ErrorKind::UnknownToken, 1, col, "unknown boundary token"));
        }
        if ch == 'i' {
            out.push((Tok::Num(C64::new(0.0, 1.0)), col));
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let mut cur = Cursor {
                chars,
                pos: i,
                line: 1,
                col0: 1,
            };
            let v = cur.number()?;
            i = cur.pos;
            if chars.get(i) == Some(&'i') {
                out.push((Tok::Num(C64::new(0.0, v)), col));
                i += 1;
            } else {
                out.push((Tok::Num(C64::new(v, 0.0)), col));
            }
            continue;
        }
        return Err(err(ErrorKind::UnknownToken, 1, col, format!("unknown token '{ch}'")));
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end_col: usize,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col)
    }

    fn sum(&mut self) -> Result<Linear, ParseError> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                self.product()?.scale(C64::new(-1.0, 0.0))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(self.product()?, 1.0);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.add(self.product()?, -1.0);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Linear, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    let col = self.col();
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = match (acc.has_y(), rhs.has_y()) {
                        (true, true) => {
                            return Err(err(ErrorKind::Nonlinear, 1, col, "product of boundary values"))
                        }
                        (true, false) => acc.scale(rhs.k),
                        _ => rhs.scale(acc.k),
                    };
                }
                Some(Tok::Slash) => {
                    let col = self.col();
                    self.pos += 1;
                    let rhs = self.factor()?;
                    if rhs.has_y() {
                        return Err(err(ErrorKind::Nonlinear, 1, col, "division by a boundary value"));
                    }
                    if rhs.k == C64::new(0.0, 0.0) {
                        return Err(err(ErrorKind::Syntax, 1, col, "division by zero"));
                    }
                    acc = acc.scale(rhs.k.inv());
                }
                // Implicit juxtaposition such as `2y(1)` or `(1-i)y(0)`.
                Some(Tok::Y(_)) | Some(Tok::LParen) => {
                    let col = self.col();
                    let rhs = self.factor()?;
                    if acc.has_y() && rhs.has_y() {
                        return Err(err(ErrorKind::Nonlinear, 1, col, "product of boundary values"));
                    }
                    acc = if acc.has_y() { acc.scale(rhs.k) } else { rhs.scale(acc.k) };
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Linear, ParseError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Num(z)) => {
                self.pos += 1;
                Ok(Linear::konst(z))
            }
            Some(Tok::Y(j)) => {
                self.pos += 1;
                let mut l = Linear::konst(C64::new(0.0, 0.0));
                l.y[j] = C64::new(1.0, 0.0);
                Ok(l)
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.scale(C64::new(-1.0, 0.0)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(Tok::RParen) {
                    return Err(err(ErrorKind::Syntax, 1, self.col(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            None => Err(err(ErrorKind::Syntax, 1, col, "unexpected end of expression")),
            Some(_) => Err(err(ErrorKind::Syntax, 1, col, "expected a term")),
        }
    }
}

fn parse_side(chars: &[char], col0: usize) -> Result<Linear, ParseError> {
    let shift = |mut e: ParseError| {
        e.column += col0;
        e
    };
    if chars.iter().all(|c| c.is_whitespace()) {
        return Err(err(ErrorKind::EmptySide, 1, col0 + 1, "empty side of the condition"));
    }
    let toks = lex(chars).map_err(shift)?;
    let mut p = ExprParser {
        toks: &toks,
        pos: 0,
        end_col: chars.len() + 1,
    };
    let v = p.sum().map_err(shift)?;
    if p.pos != toks.len() {
        return Err(shift(err(ErrorKind::Syntax, 1, p.col(), "unexpected token")));
    }
    Ok(v)
}

/// Parses e.g. `y(0)=(a-i)/(a+i)*y(1)` with numeric `a`.
pub fn parse_boundary_condition(text: &str) -> Result<BoundaryForm, ParseError> {
    let chars: Vec<char> = text.trim_end_matches(['\n', '\r']).chars().collect();
    let eqs: Vec<usize> = chars
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == '=')
        .map(|(i, _)| i)
        .collect();
    if eqs.len() != 1 {
        let col = eqs.get(1).map(|i| i + 1).unwrap_or(chars.len() + 1);
        return Err(err(ErrorKind::Syntax, 1, col, "expected exactly one '='"));
    }
    let eq = eqs[0];
    let lhs = parse_side(&chars[..eq], 0)?;
    let rhs = parse_side(&chars[eq + 1..], eq + 1)?;
    let d = lhs.add(rhs, -1.0);
    if d.k.norm() > 0.0 {
        return Err(err(ErrorKind::Inhomogeneous, 1, eq + 1, "condition has a constant term"));
    }
    let first = d
        .y
        .iter()
        .find(|v| **v != C64::new(0.0, 0.0))
        .copied()
        .ok_or_else(|| err(ErrorKind::AllZero, 1, eq + 1, "all coefficients vanish"))?;
    Ok(BoundaryForm {
        coeffs: d.y.map(|v| v / first),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| C64::new(re, im);
        assert_eq!(parse_complex("1.5-2i").unwrap(), c(1.5, -2.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex(" 2e-3 + i ").unwrap(), c(2e-3, 1.0));
        assert_eq!(parse_complex("-0.0866i").unwrap(), c(0.0, -0.0866));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("1i2").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn signed_zero_survives_formatting() {
        let z = C64::new(-0.0, -0.0);
        let back = parse_complex(&format_complex(z)).unwrap();
        assert!(back.re.is_sign_negative() && back.im.is_sign_negative());
    }
}
