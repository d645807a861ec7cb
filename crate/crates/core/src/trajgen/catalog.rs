use std::collections::HashSet;

use crate::model::ManoeuvreOrder;
use crate::{Error, Result};

/// Turn step in degrees and speed step in percent for a granularity level.
pub fn granularity_step(granularity: u8) -> Result<i32> {
    match granularity {
        1 => Ok(20),
        2 => Ok(10),
        3 => Ok(5),
        4 => Ok(2),
        g => Err(Error::Parameter(format!("granularity {g} outside 1..=4"))),
    }
}

/// Manoeuvre orders available at each segment start. Never contains the
/// non-manoeuvre orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManoeuvreCatalog {
    orders: Vec<ManoeuvreOrder>,
}

impl ManoeuvreCatalog {
    pub fn from_orders(orders: Vec<ManoeuvreOrder>) -> Result<Self> {
        let mut seen = HashSet::new();
        for o in &orders {
            if !o.is_manoeuvre() {
                return Err(Error::Parameter(format!("{o:?} is not a manoeuvre order")));
            }
            if !o.is_well_formed() {
                return Err(Error::Parameter(format!("malformed order {o:?}")));
            }
            if !seen.insert(*o) {
                return Err(Error::Parameter(format!("duplicate order {o:?}")));
            }
        }
        Ok(Self { orders })
    }

    pub fn orders(&self) -> &[ManoeuvreOrder] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Number of choices per segment as reported in experiment tables,
    /// i.e. the catalog plus `DoNothing`.
    pub fn reported_n(&self) -> usize {
        self.orders.len() + 1
    }
}

/// Turn offsets and speed offsets at every multiple of the granularity step
/// up to 40 degrees / 40 percent either way. With `allow_turn_and_speed`,
/// the four one-step turn-and-speed combinations are added.
pub fn build_catalog(granularity: u8, allow_turn_and_speed: bool) -> Result<ManoeuvreCatalog> {
    let step = granularity_step(granularity)?;
    let steps = 40 / step;
    let offsets: Vec<i32> = (-steps..=steps).filter(|&k| k != 0).map(|k| k * step).collect();
    let mut orders: Vec<ManoeuvreOrder> = offsets.iter().map(|&d| ManoeuvreOrder::Turn { delta: d }).collect();
    orders.extend(offsets.iter().map(|&d| ManoeuvreOrder::Speed { delta_pct: d }));
    if allow_turn_and_speed {
        for delta in [-step, step] {
            for delta_pct in [-step, step] {
                orders.push(ManoeuvreOrder::TurnAndSpeed { delta, delta_pct });
            }
        }
    }
    ManoeuvreCatalog::from_orders(orders)
}
