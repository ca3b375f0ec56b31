use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{dbm_to_mw, mw_to_dbm};

/// How a per-port quantity is averaged and what "worst" means for it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Loss in dB: averaged in dB, worst = largest.
    LossDb,
    /// Absolute power in dBm: averaged in mW, worst = largest.
    PowerDbm,
    /// Margin in dB: averaged in dB, worst = smallest.
    MarginDb,
}

/// Port average and worst port.
pub fn port_statistics(values: &[f64], quantity: Quantity) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("port values"));
    }
    let n = values.len() as f64;
    let avg = match quantity {
        Quantity::PowerDbm => mw_to_dbm(values.iter().map(|v| dbm_to_mw(*v)).sum::<f64>() / n),
        Quantity::LossDb | Quantity::MarginDb => values.iter().sum::<f64>() / n,
    };
    let worst = match quantity {
        Quantity::MarginDb => values.iter().copied().fold(f64::INFINITY, f64::min),
        _ => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok((avg, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_ports() {
        let (a, w) = port_statistics(&[3.0; 5], Quantity::PowerDbm).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        assert_eq!(w, 3.0);
    }

    #[test]
    fn worst_selection_and_domains() {
        let (_, w) = port_statistics(&[-20.0, -3.8], Quantity::PowerDbm).unwrap();
        assert_eq!(w, -3.8);
        let (a, w) = port_statistics(&[1.0, 2.0, 3.0], Quantity::LossDb).unwrap();
        assert_eq!((a, w), (2.0, 3.0));
        // 0 dBm and 10 dBm average to 5.5 mW.
        let (a, _) = port_statistics(&[0.0, 10.0], Quantity::PowerDbm).unwrap();
        assert!((a - 10.0 * 5.5f64.log10()).abs() < 1e-12);
        let (_, w) = port_statistics(&[4.0, -1.0], Quantity::MarginDb).unwrap();
        assert_eq!(w, -1.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(port_statistics(&[], Quantity::LossDb).is_err());
    }
}
