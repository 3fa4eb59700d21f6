//! `key = value` code configuration files.
//!
//! ```text
//! identifier = example-4-2-3
//! c = 4
//! b = 2
//! nu = 3
//! n_bits = 10
//! head_row.0 = 0:11
//! template_row.0 = 0:11111100
//! tail_row.0 = 8:11
//! marker_period = 0
//! marker_symbol = A
//! scrambler_seed = 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{CodeSpec, PlacedRow};
use crate::dna::{Base, QuaternaryWord};
use crate::error::{Error, Result};

fn parse_row(value: &str, line: usize) -> Result<PlacedRow> {
    let (col, bits) = value.split_once(':').ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected <offset>:<bits>, got {value:?}"),
    })?;
    let col = col.trim().parse::<usize>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad row offset: {e}"),
    })?;
    PlacedRow::new(col, bits.trim()).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let cleaned = value.replace('_', "");
    let parsed = if let Some(hex) = cleaned.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
            .map_err(|e| e.to_string())
            .and_then(|v| v.to_string().parse::<T>().map_err(|e| e.to_string()))
    } else {
        cleaned.parse::<T>().map_err(|e| e.to_string())
    };
    parsed.map_err(|msg| Error::Parse {
        line,
        msg: format!("{key}: {msg}"),
    })
}

pub fn parse_code_config(text: &str) -> Result<CodeSpec> {
    let mut scalars: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut rows: [BTreeMap<usize, PlacedRow>; 3] = Default::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let row_kind = [("head_row.", 0), ("template_row.", 1), ("tail_row.", 2)]
            .into_iter()
            .find_map(|(prefix, slot)| key.strip_prefix(prefix).map(|i| (i, slot)));
        if let Some((index, slot)) = row_kind {
            let index: usize = parse_num(index, line_no, key)?;
            let row = parse_row(value, line_no)?;
            if rows[slot].insert(index, row).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key {key}"),
                });
            }
            continue;
        }
        if scalars
            .insert(key.to_string(), (value.to_string(), line_no))
            .is_some()
        {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key {key}"),
            });
        }
    }

    let mut take = |key: &str| scalars.remove(key);
    let required = |entry: Option<(String, usize)>, key: &str| {
        entry.ok_or_else(|| Error::Config(format!("missing key {key:?}")))
    };
    let num = |entry: (String, usize), key: &str| parse_num::<usize>(&entry.0, entry.1, key);

    let c = num(required(take("c"), "c")?, "c")?;
    let b = num(required(take("b"), "b")?, "b")?;
    let nu = num(required(take("nu"), "nu")?, "nu")?;
    let n_bits = num(required(take("n_bits"), "n_bits")?, "n_bits")?;
    let identifier = take("identifier").map(|e| e.0).unwrap_or_default();
    let marker_period = take("marker_period")
        .map(|e| num(e, "marker_period"))
        .transpose()?
        .unwrap_or(0);
    let marker_symbol = match take("marker_symbol") {
        Some((v, line)) => {
            v.parse::<QuaternaryWord>()
                .map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?
                .0
        }
        None => vec![Base::A],
    };
    let scrambler_seed = take("scrambler_seed")
        .map(|(v, line)| parse_num::<u64>(&v, line, "scrambler_seed"))
        .transpose()?
        .unwrap_or(0);
    let message_bits = take("message_bits")
        .map(|e| num(e, "message_bits"))
        .transpose()?;
    let reconstructed = match take("reconstructed") {
        Some((v, line)) => v.parse::<bool>().map_err(|e| Error::Parse {
            line,
            msg: format!("reconstructed: {e}"),
        })?,
        None => false,
    };
    if let Some((key, (_, line))) = scalars.into_iter().next() {
        return Err(Error::Parse {
            line,
            msg: format!("unknown key {key:?}"),
        });
    }

    let [head, template, tail] = rows;
    let spec = CodeSpec {
        identifier,
        c,
        b,
        nu,
        n_bits,
        template_rows: template.into_values().collect(),
        head_rows: head.into_values().collect(),
        tail_rows: tail.into_values().collect(),
        marker_period,
        marker_symbol,
        scrambler_seed,
        message_bits,
        reconstructed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn write_code_config(spec: &CodeSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "identifier = {}", spec.identifier);
    let _ = writeln!(out, "c = {}", spec.c);
    let _ = writeln!(out, "b = {}", spec.b);
    let _ = writeln!(out, "nu = {}", spec.nu);
    let _ = writeln!(out, "n_bits = {}", spec.n_bits);
    if let Some(k) = spec.message_bits {
        let _ = writeln!(out, "message_bits = {k}");
    }
    let _ = writeln!(out, "marker_period = {}", spec.marker_period);
    let _ = writeln!(
        out,
        "marker_symbol = {}",
        QuaternaryWord(spec.marker_symbol.clone())
    );
    let _ = writeln!(out, "scrambler_seed = {}", spec.scrambler_seed);
    if spec.reconstructed {
        let _ = writeln!(out, "reconstructed = true");
    }
    for (prefix, rows) in [
        ("head_row", &spec.head_rows),
        ("template_row", &spec.template_rows),
        ("tail_row", &spec.tail_rows),
    ] {
        for (i, row) in rows.iter().enumerate() {
            let _ = writeln!(out, "{prefix}.{i} = {}:{}", row.col, row.bits);
        }
    }
    out
}
