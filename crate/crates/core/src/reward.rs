//! Workout records to DMD rewards.
//!
//! The reward is linear in distance: `base = floor(distance_km × rate)` and
//! `total = floor(base × bonus% / 100)`, where the bonus comes from the pet
//! the user selected. Duration and steps are kept on the record but do not
//! enter the formula.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::token::{Economy, TokenError, MIN_BONUS_RATE_PCT};
use crate::types::{u128_str, Address, Dmd, TokenId};

pub const DEFAULT_BASE_RATE_DMD_PER_KM: Dmd = 10;
pub const DEFAULT_MAX_AVG_SPEED_KMH: f64 = 30.0;
/// Allowed gap between the claimed average speed and distance/duration.
pub const SPEED_TOLERANCE_KMH: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("invalid record: {0}")]
    InvalidRecord(&'static str),
    #[error("claimed speed {claimed_kmh} km/h does not match measured {measured_kmh:.3} km/h")]
    InconsistentRecord { claimed_kmh: f64, measured_kmh: f64 },
    #[error("average speed {0} km/h exceeds plausibility cap")]
    ImplausibleRecord(f64),
    #[error("bonus rate {0}% is below 100%")]
    InvalidBonusRate(u32),
    #[error("user owns no pets")]
    NotEarnable,
    #[error("user does not own pet {0}")]
    NotPetOwner(TokenId),
    #[error(transparent)]
    Token(#[from] TokenError),
}

impl RewardError {
    pub fn code(&self) -> &'static str {
        match self {
            RewardError::InvalidRecord(_) => "InvalidRecord",
            RewardError::InconsistentRecord { .. } => "InconsistentRecord",
            RewardError::ImplausibleRecord(_) => "ImplausibleRecord",
            RewardError::InvalidBonusRate(_) => "InvalidBonusRate",
            RewardError::NotEarnable => "NotEarnable",
            RewardError::NotPetOwner(_) => "NotPetOwner",
            RewardError::Token(e) => e.code(),
        }
    }
}

/// One training session as captured by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkoutRecord {
    pub duration_sec: u64,
    pub distance_m: u64,
    pub avg_speed_kmh: f64,
    pub steps: u64,
    /// Unix milliseconds.
    pub started_at: u64,
}

impl WorkoutRecord {
    /// Builds a record whose average speed is derived from distance and time.
    pub fn from_distance(duration_sec: u64, distance_m: u64, steps: u64, started_at: u64) -> Self {
        let avg = if duration_sec == 0 {
            0.0
        } else {
            measured_speed_kmh(distance_m, duration_sec)
        };
        WorkoutRecord { duration_sec, distance_m, avg_speed_kmh: avg, steps, started_at }
    }

    pub fn measured_speed_kmh(&self) -> f64 {
        measured_speed_kmh(self.distance_m, self.duration_sec)
    }
}

fn measured_speed_kmh(distance_m: u64, duration_sec: u64) -> f64 {
    (distance_m as f64 / 1000.0) / (duration_sec as f64 / 3600.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardAmounts {
    #[serde(with = "u128_str")]
    pub base_dmd: Dmd,
    #[serde(with = "u128_str")]
    pub total_dmd: Dmd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardGrant {
    pub user: Address,
    pub pet_token_id: TokenId,
    #[serde(with = "u128_str")]
    pub base_dmd: Dmd,
    pub bonus_rate_pct: u32,
    #[serde(with = "u128_str")]
    pub total_dmd: Dmd,
    pub record: WorkoutRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardPolicy {
    #[serde(with = "u128_str")]
    pub base_rate_dmd_per_km: Dmd,
    pub max_avg_speed_kmh: f64,
}

impl Default for RewardPolicy {
    fn default() -> Self {
        RewardPolicy {
            base_rate_dmd_per_km: DEFAULT_BASE_RATE_DMD_PER_KM,
            max_avg_speed_kmh: DEFAULT_MAX_AVG_SPEED_KMH,
        }
    }
}

impl RewardPolicy {
    pub fn validate_record(&self, record: &WorkoutRecord) -> Result<(), RewardError> {
        if record.duration_sec == 0 {
            return Err(RewardError::InvalidRecord("duration must be positive"));
        }
        if !record.avg_speed_kmh.is_finite() || record.avg_speed_kmh < 0.0 {
            return Err(RewardError::InvalidRecord("average speed must be a non-negative number"));
        }
        let measured = record.measured_speed_kmh();
        if (measured - record.avg_speed_kmh).abs() > SPEED_TOLERANCE_KMH {
            return Err(RewardError::InconsistentRecord {
                claimed_kmh: record.avg_speed_kmh,
                measured_kmh: measured,
            });
        }
        if record.avg_speed_kmh > self.max_avg_speed_kmh {
            return Err(RewardError::ImplausibleRecord(record.avg_speed_kmh));
        }
        Ok(())
    }

    pub fn compute_reward(&self, record: &WorkoutRecord, bonus_rate_pct: u32) -> Result<RewardAmounts, RewardError> {
        if bonus_rate_pct < MIN_BONUS_RATE_PCT {
            return Err(RewardError::InvalidBonusRate(bonus_rate_pct));
        }
        self.validate_record(record)?;
        let base_dmd = (record.distance_m as u128)
            .checked_mul(self.base_rate_dmd_per_km)
            .ok_or(TokenError::Overflow)?
            / 1000;
        let total_dmd = base_dmd.checked_mul(bonus_rate_pct as u128).ok_or(TokenError::Overflow)? / 100;
        Ok(RewardAmounts { base_dmd, total_dmd })
    }

    /// Rewards `user` for `record` using the bonus of `pet`, minting through
    /// the economy's operator path. Identical records are not deduplicated.
    pub fn grant_reward(
        &self,
        economy: &mut Economy,
        caller: Address,
        user: Address,
        pet: TokenId,
        record: WorkoutRecord,
    ) -> Result<RewardGrant, RewardError> {
        if !economy.is_earnable(&user) {
            return Err(RewardError::NotEarnable);
        }
        if economy.owner_of(pet) != Some(user) {
            return Err(RewardError::NotPetOwner(pet));
        }
        let bonus = economy.pets().bonus_rate(pet).expect("owned pet has a bonus rate");
        let amounts = self.compute_reward(&record, bonus)?;
        if caller != economy.operator() {
            return Err(TokenError::NotOperator.into());
        }
        let grant = RewardGrant {
            user,
            pet_token_id: pet,
            base_dmd: amounts.base_dmd,
            bonus_rate_pct: bonus,
            total_dmd: amounts.total_dmd,
            record,
        };
        economy.mint_reward(caller, grant.clone())?;
        Ok(grant)
    }
}
