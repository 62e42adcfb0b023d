use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::sampler::Chain;
use crate::error::{Error, Result};

/// Writes one CSV row per retained draw:
/// `draw,omega,alpha,beta[,gamma],log_posterior`.
///
/// Floats use the shortest representation that round-trips, so identical
/// chains produce identical bytes.
pub fn write_chain_csv<W: Write>(chain: &Chain, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["draw".to_string()];
    header.extend(chain.parameter_names().iter().cloned());
    header.push("log_posterior".into());
    w.write_record(&header)?;
    for (i, (draw, lp)) in chain.draws().zip(chain.log_posteriors()).enumerate() {
        let mut row = Vec::with_capacity(draw.len() + 2);
        row.push(i.to_string());
        row.extend(draw.iter().map(f64::to_string));
        row.push(lp.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<chain export>".into(),
        source,
    })
}

pub fn save_chain_csv(chain: &Chain, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_chain_csv(chain, BufWriter::new(file))
}
