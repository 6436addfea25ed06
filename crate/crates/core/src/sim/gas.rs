use crate::sim::SimError;
use crate::types::{Gas, Gwei};

pub const TX_BASE_GAS: Gas = 21_000;
pub const ZERO_BYTE_GAS: Gas = 4;
pub const NONZERO_BYTE_GAS: Gas = 16;
pub const CREATE_GAS: Gas = 32_000;
pub const CODE_DEPOSIT_GAS_PER_BYTE: Gas = 200;

/// Calldata and creation cost of a transaction:
/// `21000 + 4·zero + 16·nonzero [+ 32000 + 200·code_size]`.
pub fn intrinsic_gas(payload: &[u8], is_deployment: bool, deployed_code_size: usize) -> Gas {
    let zeros = payload.iter().filter(|b| **b == 0).count() as Gas;
    let nonzeros = payload.len() as Gas - zeros;
    let mut gas = TX_BASE_GAS + ZERO_BYTE_GAS * zeros + NONZERO_BYTE_GAS * nonzeros;
    if is_deployment {
        gas += CREATE_GAS + CODE_DEPOSIT_GAS_PER_BYTE * deployed_code_size as Gas;
    }
    gas
}

pub fn check_gas_limit(needed: Gas, limit: Gas) -> Result<Gas, SimError> {
    if needed > limit {
        return Err(SimError::GasLimitExceeded { needed, limit });
    }
    Ok(needed)
}

/// Exact product `gas_used × price`.
pub fn fee_gwei(gas_used: Gas, gas_price: Gwei) -> Gwei {
    gas_price.checked_mul(gas_used).expect("fee fits in u128 wei")
}
