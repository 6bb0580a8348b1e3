//! The plain-text surface format.
//!
//! ```text
//! # comment
//! spot,2311.1
//! currency,EUR
//! quote_date,2011-12
//! strikes,percent        # or absolute
//! 0.2438,1.4198,1.5620   # T (years), r (%), y (%) opens a maturity block
//! 80,33.90               # K (percent of spot or absolute), vol (%)
//! ```
//!
//! Header rows come first; a three-number row starts a block and two-number
//! rows belong to the most recent block.

use std::fmt::Write as _;
use std::path::Path;

use crate::calibrate::{Quote, Slice, VolSurface};
use crate::error::{Result, SabrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrikeMode {
    /// Strikes as a percentage of spot.
    Percent,
    Absolute,
}

impl StrikeMode {
    fn as_str(self) -> &'static str {
        match self {
            StrikeMode::Percent => "percent",
            StrikeMode::Absolute => "absolute",
        }
    }
}

/// One maturity block, with values exactly as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub maturity: f64,
    pub rate_pct: f64,
    pub dividend_pct: f64,
    /// (strike in file units, vol in percent)
    pub rows: Vec<(f64, f64)>,
    /// 1-based line of the block header.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFile {
    pub spot: f64,
    pub currency: Option<String>,
    pub quote_date: Option<String>,
    pub strikes: StrikeMode,
    pub blocks: Vec<Block>,
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| SabrError::Parse {
        line,
        message: format!("`{}` is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(SabrError::Parse {
            line,
            message: format!("`{}` is not finite", field.trim()),
        });
    }
    Ok(v)
}

impl SurfaceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spot = None;
        let mut currency = None;
        let mut quote_date = None;
        let mut strikes = None;
        let mut blocks: Vec<Block> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            let first = fields[0];
            let is_numeric = first.parse::<f64>().is_ok();

            if !is_numeric {
                if !blocks.is_empty() {
                    return Err(SabrError::Parse {
                        line,
                        message: format!("header key `{first}` after data rows"),
                    });
                }
                if fields.len() != 2 {
                    return Err(SabrError::Parse {
                        line,
                        message: format!("header row needs `key,value`, got {} fields", fields.len()),
                    });
                }
                let value = fields[1];
                match first {
                    "spot" => spot = Some(parse_number(value, line)?),
                    "currency" => currency = Some(value.to_string()),
                    "quote_date" => quote_date = Some(value.to_string()),
                    "strikes" => {
                        strikes = Some(match value {
                            "percent" => StrikeMode::Percent,
                            "absolute" => StrikeMode::Absolute,
                            other => {
                                return Err(SabrError::Parse {
                                    line,
                                    message: format!("strikes must be `percent` or `absolute`, got `{other}`"),
                                })
                            }
                        })
                    }
                    other => {
                        return Err(SabrError::Parse {
                            line,
                            message: format!("unknown header key `{other}`"),
                        })
                    }
                }
                continue;
            }

            match fields.len() {
                3 => blocks.push(Block {
                    maturity: parse_number(fields[0], line)?,
                    rate_pct: parse_number(fields[1], line)?,
                    dividend_pct: parse_number(fields[2], line)?,
                    rows: Vec::new(),
                    line,
                }),
                2 => {
                    let k = parse_number(fields[0], line)?;
                    let v = parse_number(fields[1], line)?;
                    match blocks.last_mut() {
                        Some(b) => b.rows.push((k, v)),
                        None => {
                            return Err(SabrError::Parse {
                                line,
                                message: "quote row before any `T,r,y` maturity row".into(),
                            })
                        }
                    }
                }
                n => {
                    return Err(SabrError::Parse {
                        line,
                        message: format!("expected 2 (K,vol) or 3 (T,r,y) fields, got {n}"),
                    })
                }
            }
        }

        let spot = spot.ok_or_else(|| SabrError::Parse {
            line: 0,
            message: "missing `spot` header".into(),
        })?;
        Ok(Self {
            spot,
            currency,
            quote_date,
            strikes: strikes.unwrap_or(StrikeMode::Absolute),
            blocks,
        })
    }

    /// Canonical text: fixed header order, shortest round-trip numbers, no
    /// comments. `parse(to_csv(f)) == f` up to block line numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "spot,{}", self.spot);
        if let Some(c) = &self.currency {
            let _ = writeln!(out, "currency,{c}");
        }
        if let Some(d) = &self.quote_date {
            let _ = writeln!(out, "quote_date,{d}");
        }
        let _ = writeln!(out, "strikes,{}", self.strikes.as_str());
        for b in &self.blocks {
            let _ = writeln!(out, "{},{},{}", b.maturity, b.rate_pct, b.dividend_pct);
            for (k, v) in &b.rows {
                let _ = writeln!(out, "{k},{v}");
            }
        }
        out
    }

    /// Resolves percent strikes and converts percentages to decimals.
    pub fn to_surface(&self) -> Result<VolSurface> {
        let slices = self
            .blocks
            .iter()
            .map(|b| Slice {
                maturity: b.maturity,
                rate: b.rate_pct / 100.0,
                dividend: b.dividend_pct / 100.0,
                quotes: b
                    .rows
                    .iter()
                    .map(|&(k, v)| Quote {
                        strike: match self.strikes {
                            StrikeMode::Percent => self.spot * k / 100.0,
                            StrikeMode::Absolute => k,
                        },
                        vol: v / 100.0,
                    })
                    .collect(),
            })
            .collect();
        VolSurface::new(self.spot, slices)
    }

    /// File form of a surface, with absolute strikes. Percent fields are
    /// chosen so that converting back reproduces every decimal exactly.
    pub fn from_surface(surface: &VolSurface) -> Self {
        Self {
            spot: surface.spot,
            currency: None,
            quote_date: None,
            strikes: StrikeMode::Absolute,
            blocks: surface
                .slices
                .iter()
                .map(|s| Block {
                    maturity: s.maturity,
                    rate_pct: exact_percent(s.rate),
                    dividend_pct: exact_percent(s.dividend),
                    rows: s.quotes.iter().map(|q| (q.strike, exact_percent(q.vol))).collect(),
                    line: 0,
                })
                .collect(),
        }
    }
}

/// Shortest decimal `p` with `p / 100 == x` bit for bit.
fn exact_percent(x: f64) -> f64 {
    let scaled = x * 100.0;
    for digits in 0..17 {
        let candidate: f64 = format!("{:.*e}", digits, scaled).parse().unwrap_or(scaled);
        if candidate / 100.0 == x {
            return candidate;
        }
    }
    // Fall back to neighbouring doubles of the naive product.
    let mut up = scaled;
    let mut down = scaled;
    for _ in 0..8 {
        up = f64::from_bits(up.to_bits() + 1);
        down = f64::from_bits(down.to_bits() - 1);
        for c in [up, down] {
            if c / 100.0 == x {
                return c;
            }
        }
    }
    scaled
}

pub fn parse_surface_str(text: &str) -> Result<VolSurface> {
    SurfaceFile::parse(text)?.to_surface()
}

pub fn parse_surface(path: impl AsRef<Path>) -> Result<VolSurface> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| SabrError::Io(format!("{}: {e}", path.display())))?;
    parse_surface_str(&text)
}

pub fn serialize_surface(surface: &VolSurface) -> String {
    SurfaceFile::from_surface(surface).to_csv()
}

pub fn write_surface(path: impl AsRef<Path>, surface: &VolSurface) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_surface(surface))
        .map_err(|e| SabrError::Io(format!("{}: {e}", path.display())))
}
