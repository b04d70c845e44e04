use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Error, Result};

/// Floors from the gateway level down, with the upper bound of each
/// distance bin in metres.
pub const FLOOR_LABELS: [(&str, f64); 7] = [
    ("X", 1.5),
    ("A", 4.5),
    ("B", 7.5),
    ("C", 10.5),
    ("D", 13.5),
    ("E", 16.8),
    ("F", 20.0),
];

const BUNDLED: &str = include_str!("../../data/indoor_rssi_snr.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndoorPoint {
    pub distance_m: f64,
    pub floor: String,
    pub sf: u8,
    pub rssi_dbm: f64,
    pub snr_db: f64,
}

/// Stairwell measurements, sorted by (sf, distance).
#[derive(Debug, Clone, PartialEq)]
pub struct IndoorDataset {
    rows: Vec<IndoorPoint>,
}

impl IndoorDataset {
    /// The stairwell campaign shipped with the crate: SF7, SF9 and SF11, 19
    /// positions each.
    pub fn bundled() -> Result<Self> {
        Self::from_reader(BUNDLED.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, row) in rdr.deserialize::<IndoorPoint>().enumerate() {
            let row = row.map_err(|e| Error::Fixture(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn from_rows(mut rows: Vec<IndoorPoint>) -> Result<Self> {
        for r in &rows {
            if !(7..=12).contains(&r.sf) {
                return Err(Error::InvalidSf(r.sf));
            }
            if r.distance_m.is_nan() || r.distance_m < 0.0 || !r.rssi_dbm.is_finite() || !r.snr_db.is_finite() {
                return Err(Error::Fixture(format!("non-finite or negative value at {r:?}")));
            }
            if floor_for_distance(r.distance_m) != Some(r.floor.as_str()) {
                return Err(Error::Fixture(format!(
                    "floor {} does not match distance {} m",
                    r.floor, r.distance_m
                )));
            }
        }
        rows.sort_by(|a, b| a.sf.cmp(&b.sf).then(a.distance_m.total_cmp(&b.distance_m)));
        Ok(IndoorDataset { rows })
    }

    pub fn rows(&self) -> &[IndoorPoint] {
        &self.rows
    }

    pub fn spreading_factors(&self) -> Vec<u8> {
        let mut sfs: Vec<u8> = self.rows.iter().map(|r| r.sf).collect();
        sfs.dedup();
        sfs
    }

    pub fn for_sf(&self, sf: u8) -> impl Iterator<Item = &IndoorPoint> {
        self.rows.iter().filter(move |r| r.sf == sf)
    }

    /// (distance, rssi) pairs.
    pub fn rssi_series(&self, sf: u8) -> Vec<(f64, f64)> {
        self.for_sf(sf).map(|r| (r.distance_m, r.rssi_dbm)).collect()
    }

    /// (rssi, snr) pairs.
    pub fn snr_series(&self, sf: u8) -> Vec<(f64, f64)> {
        self.for_sf(sf).map(|r| (r.rssi_dbm, r.snr_db)).collect()
    }
}

pub fn floor_for_distance(distance_m: f64) -> Option<&'static str> {
    FLOOR_LABELS
        .iter()
        .find(|(_, upper)| distance_m <= *upper)
        .map(|(label, _)| *label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixture_shape() {
        let ds = IndoorDataset::bundled().unwrap();
        assert_eq!(ds.rows().len(), 57);
        assert_eq!(ds.spreading_factors(), vec![7, 9, 11]);
        for sf in [7, 9, 11] {
            let series = ds.rssi_series(sf);
            assert_eq!(series.len(), 19);
            assert_eq!(series[0].0, 0.0);
            assert_eq!(series[18].0, 20.0);
        }
    }

    #[test]
    fn rejects_mislabelled_floor() {
        let csv = "distance_m,floor,sf,rssi_dbm,snr_db\n12.0,A,7,-90,1\n";
        assert!(matches!(
            IndoorDataset::from_reader(csv.as_bytes()),
            Err(Error::Fixture(_))
        ));
        let csv = "distance_m,floor,sf,rssi_dbm,snr_db\n1.0,X,5,-90,1\n";
        assert_eq!(IndoorDataset::from_reader(csv.as_bytes()), Err(Error::InvalidSf(5)));
    }
}
