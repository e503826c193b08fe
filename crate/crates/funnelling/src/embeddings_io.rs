//! Word embedding tables in a word2vec-like text format keyed by feature
//! index: a `<count> <dimension>` header, then `<feature> v1 … vd` per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use funnel_core::features::EmbeddingTable;

use crate::{Error, Result};

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing `<count> <dimension>` header".into()))?;
    let mut head = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(count)), Some(Ok(dim)), None) = (head.next(), head.next(), head.next()) else {
        return Err(parse_err(1, format!("bad header `{header}`")));
    };
    let mut table = EmbeddingTable::new(dim);
    for (i, line) in lines {
        let mut tokens = line.split_whitespace();
        let feature = tokens
            .next()
            .and_then(|t| t.parse::<u32>().ok())
            .ok_or_else(|| parse_err(i + 1, "bad feature index".into()))?;
        let vector = tokens
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(i + 1, format!("bad value `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        table.insert(feature, vector).map_err(|e| parse_err(i + 1, e.to_string()))?;
    }
    if table.len() != count {
        return Err(Error::format(path, format!("header announces {count} vectors, found {}", table.len())));
    }
    Ok(table)
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", table.len(), table.dimension()).map_err(io)?;
    for (f, v) in table.iter() {
        write!(w, "{f}").map_err(io)?;
        for x in v {
            write!(w, " {x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
