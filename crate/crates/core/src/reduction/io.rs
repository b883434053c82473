//! Plain-text container for [`BlockSystem`]s.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! m n epsilon
//! A1 m n
//! <m rows of n values>
//! A2 n n
//! ...
//! ```
//!
//! Blocks appear in the order `A1 A2 B0 B1 B2 B3`, each headed by its name
//! and dimensions and followed by its values in row-major order.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use ndarray::Array2;

use super::BlockSystem;
use crate::error::{Error, Result};

const BLOCKS: [&str; 6] = ["A1", "A2", "B0", "B1", "B2", "B3"];

struct Tokens<I> {
    lines: I,
    line_no: usize,
    pending: Vec<String>,
}

impl<I: Iterator<Item = std::io::Result<String>>> Tokens<I> {
    fn next(&mut self) -> Result<Option<String>> {
        while self.pending.is_empty() {
            let Some(line) = self.lines.next() else {
                return Ok(None);
            };
            self.line_no += 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("");
            self.pending = content.split_whitespace().rev().map(str::to_owned).collect();
        }
        Ok(self.pending.pop())
    }

    fn expect(&mut self, what: &str) -> Result<String> {
        self.next()?.ok_or_else(|| Error::Parse {
            line: self.line_no,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.expect(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line: self.line_no,
            msg: format!("cannot parse {what} from {tok:?}"),
        })
    }
}

pub fn read_block_system<R: BufRead>(reader: R) -> Result<BlockSystem> {
    let mut tok = Tokens {
        lines: reader.lines(),
        line_no: 0,
        pending: Vec::new(),
    };
    let m: usize = tok.number("m")?;
    let n: usize = tok.number("n")?;
    let epsilon: f64 = tok.number("epsilon")?;
    let shapes = [(m, n), (n, n), (m, m), (m, n), (n, n), (n, m)];

    let mut blocks = Vec::with_capacity(6);
    for (name, &(rows, cols)) in BLOCKS.iter().zip(&shapes) {
        let header = tok.expect(name)?;
        if header != *name {
            return Err(Error::Parse {
                line: tok.line_no,
                msg: format!("expected block {name}, found {header:?}"),
            });
        }
        let r: usize = tok.number("row count")?;
        let c: usize = tok.number("column count")?;
        if (r, c) != (rows, cols) {
            return Err(Error::Parse {
                line: tok.line_no,
                msg: format!("{name} declared {r}x{c}, expected {rows}x{cols}"),
            });
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(tok.number::<f64>(name)?);
        }
        blocks.push(Array2::from_shape_vec((rows, cols), values).expect("length checked"));
    }
    if let Some(extra) = tok.next()? {
        return Err(Error::Parse {
            line: tok.line_no,
            msg: format!("trailing data {extra:?}"),
        });
    }
    let mut it = blocks.into_iter();
    let mut take = || it.next().expect("six blocks");
    BlockSystem::new(take(), take(), take(), take(), take(), take(), epsilon)
}

pub fn write_block_system<W: Write>(sys: &BlockSystem, mut out: W) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "{} {} {:e}", sys.m(), sys.n(), sys.epsilon).unwrap();
    for (name, block) in BLOCKS.iter().zip([&sys.a1, &sys.a2, &sys.b0, &sys.b1, &sys.b2, &sys.b3]) {
        writeln!(text, "{name} {} {}", block.nrows(), block.ncols()).unwrap();
        for row in block.rows() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            writeln!(text, "{}", line.join(" ")).unwrap();
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::random_block_system;
    use crate::random::rng;

    #[test]
    fn round_trip_is_exact() {
        let sys = random_block_system(3, 5, 0.02, &mut rng(1)).unwrap();
        let mut buf = Vec::new();
        write_block_system(&sys, &mut buf).unwrap();
        let back = read_block_system(buf.as_slice()).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn comments_and_layout_are_free() {
        let text = "# scalar system\n1 1 0.1\nA1 1 1 1\nA2 1 1\n -2\nB0 1 1 0 B1 1 1 0\nB2 1 1 0\nB3 1 1\n4 # trailing comment\n";
        let sys = read_block_system(text.as_bytes()).unwrap();
        assert_eq!(sys.b3[[0, 0]], 4.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "1 1 0.1\nA1 1 1 1\nA2 1 1 x\n";
        match read_block_system(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let wrong = "1 1 0.1\nA2 1 1 1\n";
        assert!(matches!(read_block_system(wrong.as_bytes()), Err(Error::Parse { .. })));
        let truncated = "1 1 0.1\nA1 1 1 1\n";
        assert!(matches!(read_block_system(truncated.as_bytes()), Err(Error::Parse { .. })));
    }
}
