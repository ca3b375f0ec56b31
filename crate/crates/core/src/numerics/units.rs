//! dB / dBm conversions. Every dB value that enters a field computation
//! goes through these.

/// Field-amplitude transmission of a loss of `loss_db` dB.
pub fn db_to_field(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 20.0)
}

/// Power transmission of a loss of `loss_db` dB.
pub fn db_to_power(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Loss in dB of a power ratio; `+inf` when nothing is delivered.
pub fn power_ratio_to_loss_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        f64::INFINITY
    } else {
        -10.0 * ratio.log10()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * mw.log10()
    }
}

/// Linear power ratio of a dB coefficient (e.g. crosstalk -18 dB -> 0.0158).
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
