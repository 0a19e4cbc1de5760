//! Token registry and balance store with transferability restrictions,
//! escrow sub-accounts and strict conservation.
//!
//! Balances are split into two lots per account and token: `Originated`
//! (distributed by the issuer, possibly transfer-restricted) and `Earned`
//! (rewards, freely transferable when the token says so). Stakes flow
//! through per-poll escrows instead of being burned and reminted, which
//! makes conservation a single global invariant:
//!
//! > for every token, account lots + escrow buckets == total minted.
//!
//! The ledger is one logical state machine; callers serialize mutations.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

use crate::types::{TokenAmount, Timestamp, TypeError};

/// Fixed quarter length for allowance windows: 90 days of logical time.
pub const QUARTER_SECONDS: u64 = 7_776_000;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_type!(TokenId);
id_type!(AccountId);
id_type!(EscrowId);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("token `{0}` already exists")]
    DuplicateToken(TokenId),
    #[error("unknown token `{0}`")]
    UnknownToken(TokenId),
    #[error("escrow `{0}` already exists")]
    DuplicateEscrow(EscrowId),
    #[error("unknown escrow `{0}`")]
    UnknownEscrow(EscrowId),
    #[error("insufficient balance: account `{account}` has {available} base units of `{token}` in the required lots, needs {required}")]
    InsufficientBalance {
        token: TokenId,
        account: AccountId,
        available: TokenAmount,
        required: TokenAmount,
    },
    #[error("transfers of `{token}` between users are restricted for this lot")]
    TransferRestricted { token: TokenId },
    #[error("quarterly transfer allowance exhausted for `{token}`: allowance {allowance}, already used {used}, requested {requested}")]
    AllowanceExhausted {
        token: TokenId,
        allowance: TokenAmount,
        used: TokenAmount,
        requested: TokenAmount,
    },
    #[error("insufficient escrow bucket {bucket:?}: has {available}, needs {required}")]
    InsufficientBucket {
        bucket: EscrowBucket,
        available: TokenAmount,
        required: TokenAmount,
    },
    #[error("amount overflow")]
    Overflow,
    #[error("invalid token policy: {0}")]
    InvalidPolicy(String),
    #[error("conservation violated for `{token}`: accounts+escrows {observed} != minted {minted}")]
    ConservationViolated {
        token: TokenId,
        observed: TokenAmount,
        minted: TokenAmount,
    },
    #[error(transparent)]
    Amount(#[from] TypeError),
}

// ---------------------------------------------------------------------------
// Policies and lots
// ---------------------------------------------------------------------------

/// Transfer restriction for user-to-user movements of a token.
/// Movement between users and escrows is always allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferRule {
    /// No restriction.
    Free,
    /// Originated tokens never move user-to-user.
    NonTransferableBetweenUsers,
    /// Originated transfers per quarter are capped at `fraction` of the
    /// amount originally distributed to the sending account.
    QuarterlyAllowance { numerator: u64, denominator: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPolicy {
    pub token_id: TokenId,
    pub decimals: u32,
    pub transfer_rule: TransferRule,
    /// When true, `Earned` lots are always freely transferable.
    pub reward_lots_free: bool,
}

impl TokenPolicy {
    pub fn new(token_id: impl Into<TokenId>, decimals: u32, transfer_rule: TransferRule) -> Self {
        TokenPolicy {
            token_id: token_id.into(),
            decimals,
            transfer_rule,
            reward_lots_free: true,
        }
    }

    fn validate(&self) -> Result<(), LedgerError> {
        if self.decimals > 18 {
            return Err(LedgerError::InvalidPolicy(
                "decimals must be at most 18".into(),
            ));
        }
        if let TransferRule::QuarterlyAllowance {
            numerator,
            denominator,
        } = self.transfer_rule
        {
            if numerator == 0 || denominator == 0 || numerator > denominator {
                return Err(LedgerError::InvalidPolicy(
                    "allowance fraction must be in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

impl From<&TokenId> for TokenId {
    fn from(t: &TokenId) -> TokenId {
        t.clone()
    }
}

/// Balance lot: issuer-distributed vs. earned-as-reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lot {
    Originated,
    Earned,
}

/// An amount split across the two lots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotSplit {
    pub originated: TokenAmount,
    pub earned: TokenAmount,
}

impl LotSplit {
    pub const ZERO: LotSplit = LotSplit {
        originated: TokenAmount::ZERO,
        earned: TokenAmount::ZERO,
    };

    pub fn single(lot: Lot, amount: TokenAmount) -> Self {
        match lot {
            Lot::Originated => LotSplit {
                originated: amount,
                earned: TokenAmount::ZERO,
            },
            Lot::Earned => LotSplit {
                originated: TokenAmount::ZERO,
                earned: amount,
            },
        }
    }

    pub fn total(&self) -> Option<TokenAmount> {
        self.originated.checked_add(self.earned)
    }

    pub fn is_zero(&self) -> bool {
        self.originated.is_zero() && self.earned.is_zero()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Holding {
    originated: TokenAmount,
    earned: TokenAmount,
    /// Cumulative amount ever minted to this account as `Originated`;
    /// quarterly allowances are measured against this, not the live balance.
    originated_distributed: TokenAmount,
    quarter_index: u64,
    quarterly_transferred: TokenAmount,
}

impl Holding {
    fn total(&self) -> TokenAmount {
        self.originated
            .checked_add(self.earned)
            .expect("lot sum exceeds u128")
    }

    fn lot(&self, lot: Lot) -> TokenAmount {
        match lot {
            Lot::Originated => self.originated,
            Lot::Earned => self.earned,
        }
    }

    fn lot_mut(&mut self, lot: Lot) -> &mut TokenAmount {
        match lot {
            Lot::Originated => &mut self.originated,
            Lot::Earned => &mut self.earned,
        }
    }
}

// ---------------------------------------------------------------------------
// Escrows
// ---------------------------------------------------------------------------

/// Sub-account of a poll escrow.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum EscrowBucket {
    /// Active stakes during the contribution period.
    Stake,
    /// Stake retained past tallying to cover possible penalties.
    Withheld,
    /// The pollster-funded reward pool.
    Pool,
    /// Unreleased withholdings that accrue to the pollster at close.
    Forfeited,
    /// Staging bucket for multi-step disbursements.
    Payout,
}

impl EscrowBucket {
    pub const ALL: [EscrowBucket; 5] = [
        EscrowBucket::Stake,
        EscrowBucket::Withheld,
        EscrowBucket::Pool,
        EscrowBucket::Forfeited,
        EscrowBucket::Payout,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escrow {
    pub escrow_id: EscrowId,
    pub token_id: TokenId,
    buckets: BTreeMap<EscrowBucket, TokenAmount>,
}

impl Escrow {
    pub fn bucket(&self, bucket: EscrowBucket) -> TokenAmount {
        self.buckets.get(&bucket).copied().unwrap_or_default()
    }

    pub fn total(&self) -> TokenAmount {
        self.buckets
            .values()
            .try_fold(TokenAmount::ZERO, |acc, v| acc.checked_add(*v))
            .expect("escrow total exceeds u128")
    }
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    tokens: BTreeMap<TokenId, TokenPolicy>,
    accounts: BTreeMap<AccountId, BTreeMap<TokenId, Holding>>,
    escrows: BTreeMap<EscrowId, Escrow>,
    minted: BTreeMap<TokenId, TokenAmount>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn create_token(&mut self, policy: TokenPolicy) -> Result<(), LedgerError> {
        policy.validate()?;
        if self.tokens.contains_key(&policy.token_id) {
            return Err(LedgerError::DuplicateToken(policy.token_id));
        }
        self.minted.insert(policy.token_id.clone(), TokenAmount::ZERO);
        self.tokens.insert(policy.token_id.clone(), policy);
        Ok(())
    }

    pub fn token(&self, token: &TokenId) -> Result<&TokenPolicy, LedgerError> {
        self.tokens
            .get(token)
            .ok_or_else(|| LedgerError::UnknownToken(token.clone()))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &TokenPolicy> {
        self.tokens.values()
    }

    pub fn decimals(&self, token: &TokenId) -> Result<u32, LedgerError> {
        Ok(self.token(token)?.decimals)
    }

    pub fn mint(
        &mut self,
        token: &TokenId,
        account: &AccountId,
        amount: TokenAmount,
        lot: Lot,
    ) -> Result<(), LedgerError> {
        self.token(token)?;
        let minted = self.minted.entry(token.clone()).or_default();
        *minted = minted.checked_add(amount).ok_or(LedgerError::Overflow)?;
        let holding = self
            .accounts
            .entry(account.clone())
            .or_default()
            .entry(token.clone())
            .or_default();
        let slot = holding.lot_mut(lot);
        *slot = slot.checked_add(amount).ok_or(LedgerError::Overflow)?;
        if lot == Lot::Originated {
            holding.originated_distributed = holding
                .originated_distributed
                .checked_add(amount)
                .ok_or(LedgerError::Overflow)?;
        }
        Ok(())
    }

    /// Total balance (both lots) of an account. Unknown accounts hold zero.
    pub fn balance(&self, token: &TokenId, account: &AccountId) -> Result<TokenAmount, LedgerError> {
        self.token(token)?;
        Ok(self
            .accounts
            .get(account)
            .and_then(|h| h.get(token))
            .map(|h| h.total())
            .unwrap_or_default())
    }

    /// Balance split by lot. Unknown accounts hold zero.
    pub fn lot_balances(
        &self,
        token: &TokenId,
        account: &AccountId,
    ) -> Result<LotSplit, LedgerError> {
        self.token(token)?;
        Ok(self
            .accounts
            .get(account)
            .and_then(|h| h.get(token))
            .map(|h| LotSplit {
                originated: h.originated,
                earned: h.earned,
            })
            .unwrap_or(LotSplit::ZERO))
    }

    pub fn total_minted(&self, token: &TokenId) -> Result<TokenAmount, LedgerError> {
        self.token(token)?;
        Ok(self.minted.get(token).copied().unwrap_or_default())
    }

    /// User-to-user transfer of a specific lot, subject to the token's
    /// transfer rule. `now` drives the quarterly allowance window.
    pub fn transfer(
        &mut self,
        token: &TokenId,
        from: &AccountId,
        to: &AccountId,
        amount: TokenAmount,
        lot: Lot,
        now: Timestamp,
    ) -> Result<(), LedgerError> {
        let policy = self.token(token)?.clone();
        if amount.is_zero() {
            return Ok(());
        }

        let restricted = match lot {
            Lot::Originated => true,
            Lot::Earned => !policy.reward_lots_free,
        };
        if restricted {
            match policy.transfer_rule {
                TransferRule::Free => {}
                TransferRule::NonTransferableBetweenUsers => {
                    return Err(LedgerError::TransferRestricted {
                        token: token.clone(),
                    });
                }
                TransferRule::QuarterlyAllowance {
                    numerator,
                    denominator,
                } => {
                    self.charge_allowance(token, from, amount, numerator, denominator, now)?;
                }
            }
        }

        self.debit(token, from, LotSplit::single(lot, amount))?;
        self.credit(token, to, LotSplit::single(lot, amount))?;
        Ok(())
    }

    fn charge_allowance(
        &mut self,
        token: &TokenId,
        from: &AccountId,
        amount: TokenAmount,
        numerator: u64,
        denominator: u64,
        now: Timestamp,
    ) -> Result<(), LedgerError> {
        let holding = self
            .accounts
            .entry(from.clone())
            .or_default()
            .entry(token.clone())
            .or_default();
        let quarter = now.seconds() / QUARTER_SECONDS;
        if holding.quarter_index != quarter {
            holding.quarter_index = quarter;
            holding.quarterly_transferred = TokenAmount::ZERO;
        }
        let allowance = TokenAmount::from_base_units(
            crate::rate::mul_div_floor(
                holding.originated_distributed.base_units(),
                numerator as u128,
                denominator as u128,
            )
            .ok_or(LedgerError::Overflow)?,
        );
        let used = holding.quarterly_transferred;
        let after = used.checked_add(amount).ok_or(LedgerError::Overflow)?;
        if after > allowance {
            return Err(LedgerError::AllowanceExhausted {
                token: token.clone(),
                allowance,
                used,
                requested: amount,
            });
        }
        holding.quarterly_transferred = after;
        Ok(())
    }

    fn debit(
        &mut self,
        token: &TokenId,
        account: &AccountId,
        split: LotSplit,
    ) -> Result<(), LedgerError> {
        let holding = self
            .accounts
            .entry(account.clone())
            .or_default()
            .entry(token.clone())
            .or_default();
        for (lot, amount) in [(Lot::Originated, split.originated), (Lot::Earned, split.earned)] {
            if holding.lot(lot) < amount {
                return Err(LedgerError::InsufficientBalance {
                    token: token.clone(),
                    account: account.clone(),
                    available: holding.lot(lot),
                    required: amount,
                });
            }
        }
        holding.originated = holding.originated.checked_sub(split.originated).unwrap();
        holding.earned = holding.earned.checked_sub(split.earned).unwrap();
        Ok(())
    }

    fn credit(
        &mut self,
        token: &TokenId,
        account: &AccountId,
        split: LotSplit,
    ) -> Result<(), LedgerError> {
        let holding = self
            .accounts
            .entry(account.clone())
            .or_default()
            .entry(token.clone())
            .or_default();
        holding.originated = holding
            .originated
            .checked_add(split.originated)
            .ok_or(LedgerError::Overflow)?;
        holding.earned = holding
            .earned
            .checked_add(split.earned)
            .ok_or(LedgerError::Overflow)?;
        Ok(())
    }

    /// Split an amount across the account's lots, drawing `Originated`
    /// first. Used when staking, so earned (liquid) tokens are kept back.
    pub fn draw_split(
        &self,
        token: &TokenId,
        account: &AccountId,
        amount: TokenAmount,
    ) -> Result<LotSplit, LedgerError> {
        let lots = self.lot_balances(token, account)?;
        let total = lots.total().ok_or(LedgerError::Overflow)?;
        if total < amount {
            return Err(LedgerError::InsufficientBalance {
                token: token.clone(),
                account: account.clone(),
                available: total,
                required: amount,
            });
        }
        let originated = lots.originated.min(amount);
        let earned = amount.checked_sub(originated).unwrap();
        Ok(LotSplit { originated, earned })
    }

    // -- escrows ------------------------------------------------------------

    pub fn create_escrow(
        &mut self,
        escrow_id: impl Into<EscrowId>,
        token: &TokenId,
    ) -> Result<(), LedgerError> {
        self.token(token)?;
        let escrow_id = escrow_id.into();
        if self.escrows.contains_key(&escrow_id) {
            return Err(LedgerError::DuplicateEscrow(escrow_id));
        }
        self.escrows.insert(
            escrow_id.clone(),
            Escrow {
                escrow_id,
                token_id: token.clone(),
                buckets: BTreeMap::new(),
            },
        );
        Ok(())
    }

    pub fn escrow(&self, escrow_id: &EscrowId) -> Result<&Escrow, LedgerError> {
        self.escrows
            .get(escrow_id)
            .ok_or_else(|| LedgerError::UnknownEscrow(escrow_id.clone()))
    }

    pub fn escrows(&self) -> impl Iterator<Item = &Escrow> {
        self.escrows.values()
    }

    /// Move funds from an account into an escrow bucket. Always allowed
    /// regardless of transfer rules (escrows are not users).
    pub fn deposit_to_escrow(
        &mut self,
        escrow_id: &EscrowId,
        from: &AccountId,
        bucket: EscrowBucket,
        split: LotSplit,
    ) -> Result<(), LedgerError> {
        let token = self.escrow(escrow_id)?.token_id.clone();
        let amount = split.total().ok_or(LedgerError::Overflow)?;
        self.debit(&token, from, split)?;
        let escrow = self.escrows.get_mut(escrow_id).unwrap();
        let slot = escrow.buckets.entry(bucket).or_default();
        *slot = slot.checked_add(amount).ok_or(LedgerError::Overflow)?;
        Ok(())
    }

    /// Move funds from an escrow bucket back to an account, crediting the
    /// given lot split. The split's lot totals must equal the amount drawn.
    pub fn withdraw_from_escrow(
        &mut self,
        escrow_id: &EscrowId,
        bucket: EscrowBucket,
        to: &AccountId,
        split: LotSplit,
    ) -> Result<(), LedgerError> {
        let token = self.escrow(escrow_id)?.token_id.clone();
        let amount = split.total().ok_or(LedgerError::Overflow)?;
        if amount.is_zero() {
            return Ok(());
        }
        let escrow = self.escrows.get_mut(escrow_id).unwrap();
        let slot = escrow.buckets.entry(bucket).or_default();
        if *slot < amount {
            return Err(LedgerError::InsufficientBucket {
                bucket,
                available: *slot,
                required: amount,
            });
        }
        *slot = slot.checked_sub(amount).unwrap();
        self.credit(&token, to, split)?;
        Ok(())
    }

    /// Intra-escrow move; the escrow total is unchanged.
    pub fn escrow_move(
        &mut self,
        escrow_id: &EscrowId,
        from: EscrowBucket,
        to: EscrowBucket,
        amount: TokenAmount,
    ) -> Result<(), LedgerError> {
        if amount.is_zero() {
            return Ok(());
        }
        let escrow = self
            .escrows
            .get_mut(escrow_id)
            .ok_or_else(|| LedgerError::UnknownEscrow(escrow_id.clone()))?;
        let source = escrow.buckets.entry(from).or_default();
        if *source < amount {
            return Err(LedgerError::InsufficientBucket {
                bucket: from,
                available: *source,
                required: amount,
            });
        }
        *source = source.checked_sub(amount).unwrap();
        let sink = escrow.buckets.entry(to).or_default();
        *sink = sink.checked_add(amount).ok_or(LedgerError::Overflow)?;
        Ok(())
    }

    // -- invariants and snapshots --------------------------------------------

    /// Verify that account lots plus escrow buckets equal total minted for
    /// every token.
    pub fn check_conservation(&self) -> Result<(), LedgerError> {
        for (token, minted) in &self.minted {
            let mut observed = TokenAmount::ZERO;
            for holdings in self.accounts.values() {
                if let Some(h) = holdings.get(token) {
                    observed = observed.checked_add(h.total()).ok_or(LedgerError::Overflow)?;
                }
            }
            for escrow in self.escrows.values() {
                if &escrow.token_id == token {
                    observed = observed
                        .checked_add(escrow.total())
                        .ok_or(LedgerError::Overflow)?;
                }
            }
            if observed != *minted {
                return Err(LedgerError::ConservationViolated {
                    token: token.clone(),
                    observed,
                    minted: *minted,
                });
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            tokens: self
                .tokens
                .values()
                .map(|p| TokenSnapshot {
                    id: p.token_id.clone(),
                    decimals: p.decimals,
                    rule: p.transfer_rule.clone(),
                    reward_lots_free: p.reward_lots_free,
                })
                .collect(),
            accounts: self
                .accounts
                .iter()
                .filter(|(_, holdings)| holdings.values().any(|h| !h.total().is_zero()))
                .map(|(id, holdings)| AccountSnapshot {
                    id: id.clone(),
                    balances: holdings
                        .iter()
                        .filter(|(_, h)| !h.total().is_zero())
                        .map(|(token, h)| {
                            let decimals = self.tokens[token].decimals;
                            (
                                token.clone(),
                                BalanceSnapshot {
                                    originated: h.originated.to_display(decimals),
                                    earned: h.earned.to_display(decimals),
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
            escrows: self
                .escrows
                .values()
                .filter(|e| !e.total().is_zero())
                .map(|e| {
                    let decimals = self.tokens[&e.token_id].decimals;
                    EscrowSnapshot {
                        id: e.escrow_id.clone(),
                        token: e.token_id.clone(),
                        buckets: e
                            .buckets
                            .iter()
                            .filter(|(_, v)| !v.is_zero())
                            .map(|(b, v)| (*b, v.to_display(decimals)))
                            .collect(),
                    }
                })
                .collect(),
        }
    }

    /// Rebuild a ledger from an exported snapshot. Allowance bookkeeping is
    /// not part of the snapshot; imported ledgers start a fresh quarter.
    pub fn from_snapshot(snapshot: &LedgerSnapshot) -> Result<Ledger, LedgerError> {
        let mut ledger = Ledger::new();
        for token in &snapshot.tokens {
            let mut policy = TokenPolicy::new(token.id.clone(), token.decimals, token.rule.clone());
            policy.reward_lots_free = token.reward_lots_free;
            ledger.create_token(policy)?;
        }
        for account in &snapshot.accounts {
            for (token, balance) in &account.balances {
                let decimals = ledger.decimals(token)?;
                let originated = TokenAmount::from_display(&balance.originated, decimals)?;
                let earned = TokenAmount::from_display(&balance.earned, decimals)?;
                ledger.mint(token, &account.id, originated, Lot::Originated)?;
                ledger.mint(token, &account.id, earned, Lot::Earned)?;
            }
        }
        for escrow in &snapshot.escrows {
            ledger.create_escrow(escrow.id.clone(), &escrow.token)?;
            let decimals = ledger.decimals(&escrow.token)?;
            for (bucket, amount) in &escrow.buckets {
                let amount = TokenAmount::from_display(amount, decimals)?;
                let minted = ledger.minted.entry(escrow.token.clone()).or_default();
                *minted = minted.checked_add(amount).ok_or(LedgerError::Overflow)?;
                let slot = ledger
                    .escrows
                    .get_mut(&escrow.id)
                    .unwrap()
                    .buckets
                    .entry(*bucket)
                    .or_default();
                *slot = slot.checked_add(amount).ok_or(LedgerError::Overflow)?;
            }
        }
        ledger.check_conservation()?;
        Ok(ledger)
    }
}

// ---------------------------------------------------------------------------
// Snapshot wire format
// ---------------------------------------------------------------------------

/// Canonical JSON export of the ledger: sorted keys, amounts as decimal
/// display strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub tokens: Vec<TokenSnapshot>,
    pub accounts: Vec<AccountSnapshot>,
    pub escrows: Vec<EscrowSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSnapshot {
    pub id: TokenId,
    pub decimals: u32,
    pub rule: TransferRule,
    #[serde(default = "default_true")]
    pub reward_lots_free: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountSnapshot {
    pub id: AccountId,
    pub balances: BTreeMap<TokenId, BalanceSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSnapshot {
    pub originated: String,
    pub earned: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscrowSnapshot {
    pub id: EscrowId,
    pub token: TokenId,
    pub buckets: BTreeMap<EscrowBucket, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amount(display: &str) -> TokenAmount {
        TokenAmount::from_display(display, 9).unwrap()
    }

    fn poll_token() -> TokenPolicy {
        TokenPolicy::new("POLL", 9, TransferRule::NonTransferableBetweenUsers)
    }

    fn eth_token() -> TokenPolicy {
        TokenPolicy::new("ETH", 9, TransferRule::Free)
    }

    fn rating_token() -> TokenPolicy {
        TokenPolicy::new(
            "RATE",
            9,
            TransferRule::QuarterlyAllowance {
                numerator: 1,
                denominator: 10,
            },
        )
    }

    #[test]
    fn token_registration() {
        let mut ledger = Ledger::new();
        ledger.create_token(poll_token()).unwrap();
        ledger.create_token(eth_token()).unwrap();
        ledger.create_token(rating_token()).unwrap();
        assert!(matches!(
            ledger.create_token(poll_token()),
            Err(LedgerError::DuplicateToken(_))
        ));
        assert_eq!(
            ledger.total_minted(&"POLL".into()).unwrap(),
            TokenAmount::ZERO
        );
    }

    #[test]
    fn bad_allowance_fraction_rejected() {
        let mut ledger = Ledger::new();
        let policy = TokenPolicy::new(
            "BAD",
            9,
            TransferRule::QuarterlyAllowance {
                numerator: 11,
                denominator: 10,
            },
        );
        assert!(matches!(
            ledger.create_token(policy),
            Err(LedgerError::InvalidPolicy(_))
        ));
    }

    #[test]
    fn minting_tracks_supply() {
        let mut ledger = Ledger::new();
        ledger.create_token(poll_token()).unwrap();
        let token = TokenId::from("POLL");
        for i in 0..50 {
            ledger
                .mint(&token, &AccountId::new(format!("user-{i}")), amount("100"), Lot::Originated)
                .unwrap();
        }
        assert_eq!(ledger.total_minted(&token).unwrap(), amount("5000"));
        // Zero mint is a no-op.
        ledger
            .mint(&token, &"user-0".into(), TokenAmount::ZERO, Lot::Originated)
            .unwrap();
        assert_eq!(ledger.total_minted(&token).unwrap(), amount("5000"));
        ledger.check_conservation().unwrap();
    }

    #[test]
    fn rating_supply_split() {
        let mut ledger = Ledger::new();
        ledger.create_token(rating_token()).unwrap();
        let token = TokenId::from("RATE");
        ledger
            .mint(&token, &"public".into(), amount("900000"), Lot::Originated)
            .unwrap();
        ledger
            .mint(&token, &"company".into(), amount("100000"), Lot::Originated)
            .unwrap();
        assert_eq!(ledger.total_minted(&token).unwrap(), amount("1000000"));
    }

    #[test]
    fn balances_for_unknowns() {
        let mut ledger = Ledger::new();
        ledger.create_token(eth_token()).unwrap();
        let token = TokenId::from("ETH");
        assert_eq!(
            ledger.balance(&token, &"ghost".into()).unwrap(),
            TokenAmount::ZERO
        );
        assert!(matches!(
            ledger.balance(&"NOPE".into(), &"ghost".into()),
            Err(LedgerError::UnknownToken(_))
        ));
        ledger
            .mint(&token, &"alice".into(), amount("100"), Lot::Originated)
            .unwrap();
        assert_eq!(ledger.balance(&token, &"alice".into()).unwrap(), amount("100"));
    }

    #[test]
    fn non_transferable_between_users_but_escrow_ok() {
        let mut ledger = Ledger::new();
        ledger.create_token(poll_token()).unwrap();
        let token = TokenId::from("POLL");
        ledger
            .mint(&token, &"alice".into(), amount("100"), Lot::Originated)
            .unwrap();

        let err = ledger
            .transfer(
                &token,
                &"alice".into(),
                &"bob".into(),
                amount("10"),
                Lot::Originated,
                Timestamp::ZERO,
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::TransferRestricted { .. }));

        // Earned rewards are freely transferable.
        ledger
            .mint(&token, &"alice".into(), amount("5"), Lot::Earned)
            .unwrap();
        ledger
            .transfer(
                &token,
                &"alice".into(),
                &"bob".into(),
                amount("5"),
                Lot::Earned,
                Timestamp::ZERO,
            )
            .unwrap();

        // Escrow movements bypass the rule entirely.
        ledger.create_escrow("poll-1", &token).unwrap();
        ledger
            .deposit_to_escrow(
                &"poll-1".into(),
                &"alice".into(),
                EscrowBucket::Stake,
                LotSplit::single(Lot::Originated, amount("100")),
            )
            .unwrap();
        assert_eq!(
            ledger.escrow(&"poll-1".into()).unwrap().bucket(EscrowBucket::Stake),
            amount("100")
        );
        ledger
            .withdraw_from_escrow(
                &"poll-1".into(),
                EscrowBucket::Stake,
                &"alice".into(),
                LotSplit::single(Lot::Originated, amount("100")),
            )
            .unwrap();
        assert_eq!(ledger.balance(&token, &"alice".into()).unwrap(), amount("100"));
        ledger.check_conservation().unwrap();
    }

    #[test]
    fn quarterly_allowance_enforced_and_resets() {
        let mut ledger = Ledger::new();
        ledger.create_token(rating_token()).unwrap();
        let token = TokenId::from("RATE");
        ledger
            .mint(&token, &"holder".into(), amount("1000"), Lot::Originated)
            .unwrap();

        // Allowance is 10% of the originally distributed 1000 = 100.
        let err = ledger
            .transfer(
                &token,
                &"holder".into(),
                &"friend".into(),
                amount("101"),
                Lot::Originated,
                Timestamp::ZERO,
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::AllowanceExhausted { .. }));

        ledger
            .transfer(
                &token,
                &"holder".into(),
                &"friend".into(),
                amount("60"),
                Lot::Originated,
                Timestamp::ZERO,
            )
            .unwrap();
        ledger
            .transfer(
                &token,
                &"holder".into(),
                &"friend".into(),
                amount("40"),
                Lot::Originated,
                Timestamp::from_seconds(100),
            )
            .unwrap();
        // Allowance for this quarter is now gone.
        let err = ledger
            .transfer(
                &token,
                &"holder".into(),
                &"friend".into(),
                amount("0.000000001"),
                Lot::Originated,
                Timestamp::from_seconds(200),
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::AllowanceExhausted { .. }));

        // A new quarter resets the window; allowance is still measured
        // against the original distribution, not the shrunken balance.
        ledger
            .transfer(
                &token,
                &"holder".into(),
                &"friend".into(),
                amount("100"),
                Lot::Originated,
                Timestamp::from_seconds(QUARTER_SECONDS),
            )
            .unwrap();
        // The receiver did not gain any allowance of their own.
        let err = ledger
            .transfer(
                &token,
                &"friend".into(),
                &"other".into(),
                amount("1"),
                Lot::Originated,
                Timestamp::from_seconds(QUARTER_SECONDS),
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::AllowanceExhausted { .. }));
        ledger.check_conservation().unwrap();
    }

    #[test]
    fn insufficient_balances_rejected() {
        let mut ledger = Ledger::new();
        ledger.create_token(eth_token()).unwrap();
        let token = TokenId::from("ETH");
        ledger
            .mint(&token, &"alice".into(), amount("10"), Lot::Originated)
            .unwrap();
        let err = ledger
            .transfer(
                &token,
                &"alice".into(),
                &"bob".into(),
                amount("11"),
                Lot::Originated,
                Timestamp::ZERO,
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::InsufficientBalance { .. }));
    }

    #[test]
    fn escrow_moves_preserve_total() {
        let mut ledger = Ledger::new();
        ledger.create_token(eth_token()).unwrap();
        let token = TokenId::from("ETH");
        ledger
            .mint(&token, &"alice".into(), amount("100"), Lot::Originated)
            .unwrap();
        ledger.create_escrow("poll-1", &token).unwrap();
        let escrow = EscrowId::from("poll-1");
        ledger
            .deposit_to_escrow(
                &escrow,
                &"alice".into(),
                EscrowBucket::Stake,
                LotSplit::single(Lot::Originated, amount("40")),
            )
            .unwrap();
        ledger
            .escrow_move(&escrow, EscrowBucket::Stake, EscrowBucket::Withheld, amount("5"))
            .unwrap();
        ledger
            .escrow_move(&escrow, EscrowBucket::Withheld, EscrowBucket::Payout, amount("5"))
            .unwrap();
        // Zero moves are no-ops.
        ledger
            .escrow_move(&escrow, EscrowBucket::Pool, EscrowBucket::Payout, TokenAmount::ZERO)
            .unwrap();
        let e = ledger.escrow(&escrow).unwrap();
        assert_eq!(e.total(), amount("40"));
        assert_eq!(e.bucket(EscrowBucket::Payout), amount("5"));
        let err = ledger
            .escrow_move(&escrow, EscrowBucket::Pool, EscrowBucket::Payout, amount("1"))
            .unwrap_err();
        assert!(matches!(err, LedgerError::InsufficientBucket { .. }));
        assert_eq!(ledger.balance(&token, &"alice".into()).unwrap(), amount("60"));
        ledger.check_conservation().unwrap();
    }

    #[test]
    fn draw_split_prefers_originated() {
        let mut ledger = Ledger::new();
        ledger.create_token(eth_token()).unwrap();
        let token = TokenId::from("ETH");
        ledger
            .mint(&token, &"alice".into(), amount("30"), Lot::Originated)
            .unwrap();
        ledger
            .mint(&token, &"alice".into(), amount("20"), Lot::Earned)
            .unwrap();
        let split = ledger.draw_split(&token, &"alice".into(), amount("40")).unwrap();
        assert_eq!(split.originated, amount("30"));
        assert_eq!(split.earned, amount("10"));
        assert!(ledger.draw_split(&token, &"alice".into(), amount("51")).is_err());
    }

    #[test]
    fn snapshot_round_trip_is_canonical() {
        let mut ledger = Ledger::new();
        ledger.create_token(eth_token()).unwrap();
        ledger.create_token(rating_token()).unwrap();
        let eth = TokenId::from("ETH");
        ledger
            .mint(&eth, &"alice".into(), amount("12.5"), Lot::Originated)
            .unwrap();
        ledger
            .mint(&eth, &"alice".into(), amount("0.25"), Lot::Earned)
            .unwrap();
        ledger.create_escrow("poll-1", &eth).unwrap();
        ledger
            .deposit_to_escrow(
                &"poll-1".into(),
                &"alice".into(),
                EscrowBucket::Pool,
                LotSplit::single(Lot::Originated, amount("2")),
            )
            .unwrap();

        let snapshot = ledger.snapshot();
        let json = serde_json::to_string(&snapshot).unwrap();
        let parsed: LedgerSnapshot = serde_json::from_str(&json).unwrap();
        let rebuilt = Ledger::from_snapshot(&parsed).unwrap();
        assert_eq!(serde_json::to_string(&rebuilt.snapshot()).unwrap(), json);
        rebuilt.check_conservation().unwrap();
        assert_eq!(
            rebuilt.balance(&eth, &"alice".into()).unwrap(),
            amount("10.75")
        );
    }
}
