//! Engagement instances, user profiles and payment vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Payments whose magnitude falls below this are clamped to zero.
pub const CLAMP_EPS: f64 = 1e-12;

/// An engagement matrix over users and artists together with the artist share `alpha`.
///
/// Rows are users, columns are artists. Instances are immutable once built and every
/// constructor validates the model invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    n_users: usize,
    n_artists: usize,
    weights: Vec<f64>,
    alpha: f64,
}

/// One user's engagement with every artist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub weights: Vec<f64>,
}

impl UserProfile {
    pub fn new(weights: Vec<f64>) -> Self {
        UserProfile { weights }
    }

    /// A profile with `mass` on artist `artist` and nothing elsewhere.
    pub fn point_mass(n_artists: usize, artist: usize, mass: f64) -> Self {
        let mut weights = vec![0.0; n_artists];
        weights[artist] = mass;
        UserProfile { weights }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl From<Vec<f64>> for UserProfile {
    fn from(weights: Vec<f64>) -> Self {
        UserProfile { weights }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
}

fn check_row(user: usize, row: &[f64]) -> Result<()> {
    let mut total = 0.0;
    for (artist, &w) in row.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFiniteWeight { user, artist });
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { user, artist });
        }
        total += w;
    }
    if total > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroRow(user))
    }
}

/// Checks every instance invariant on raw parts.
pub fn validate_parts(n_users: usize, n_artists: usize, weights: &[f64], alpha: f64) -> Result<()> {
    if n_users == 0 || n_artists == 0 {
        return Err(Error::EmptyInstance);
    }
    if weights.len() != n_users * n_artists {
        return Err(Error::Dimension { expected: n_users * n_artists, got: weights.len() });
    }
    for (i, row) in weights.chunks(n_artists).enumerate() {
        check_row(i, row)?;
    }
    check_alpha(alpha)
}

/// Re-checks the invariants of an existing instance.
pub fn validate(instance: &Instance) -> Result<()> {
    validate_parts(instance.n_users, instance.n_artists, &instance.weights, instance.alpha)
}

impl Instance {
    /// Builds an instance from user rows.
    pub fn new(rows: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        let n_users = rows.len();
        let n_artists = rows.first().map_or(0, Vec::len);
        let mut weights = Vec::with_capacity(n_users * n_artists);
        for row in &rows {
            if row.len() != n_artists {
                return Err(Error::Dimension { expected: n_artists, got: row.len() });
            }
            weights.extend_from_slice(row);
        }
        Self::from_flat(n_users, n_artists, weights, alpha)
    }

    /// Builds an instance from a row-major weight buffer.
    pub fn from_flat(n_users: usize, n_artists: usize, weights: Vec<f64>, alpha: f64) -> Result<Self> {
        validate_parts(n_users, n_artists, &weights, alpha)?;
        Ok(Instance { n_users, n_artists, weights, alpha })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_artists(&self) -> usize {
        self.n_artists
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The artist budget `alpha * n`.
    pub fn budget(&self) -> f64 {
        self.alpha * self.n_users as f64
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.weights[user * self.n_artists..(user + 1) * self.n_artists]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks(self.n_artists)
    }

    pub fn get(&self, user: usize, artist: usize) -> f64 {
        self.weights[user * self.n_artists + artist]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Total engagement of each user.
    pub fn user_totals(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Total engagement received by each artist.
    pub fn artist_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_artists];
        for row in self.rows() {
            for (t, &w) in totals.iter_mut().zip(row) {
                *t += w;
            }
        }
        totals
    }

    pub fn total(&self) -> f64 {
        self.user_totals().iter().sum()
    }

    /// Same weights under a different artist share.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Instance { alpha, ..self.clone() })
    }

    /// Appends one user.
    pub fn add_user(&self, profile: &UserProfile) -> Result<Self> {
        if profile.weights.len() != self.n_artists {
            return Err(Error::Dimension { expected: self.n_artists, got: profile.weights.len() });
        }
        check_row(self.n_users, &profile.weights)?;
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&profile.weights);
        Ok(Instance { n_users: self.n_users + 1, weights, ..*self })
    }

    /// Replaces the engagement row of user `user`.
    pub fn replace_user(&self, user: usize, profile: &UserProfile) -> Result<Self> {
        if user >= self.n_users {
            return Err(Error::Index { index: user, len: self.n_users });
        }
        if profile.weights.len() != self.n_artists {
            return Err(Error::Dimension { expected: self.n_artists, got: profile.weights.len() });
        }
        check_row(user, &profile.weights)?;
        let mut weights = self.weights.clone();
        weights[user * self.n_artists..(user + 1) * self.n_artists].copy_from_slice(&profile.weights);
        Ok(Instance { weights, ..*self })
    }

    /// The sub-instance made of the listed users, in the given order.
    pub fn select_users(&self, users: &[usize]) -> Result<Self> {
        let mut weights = Vec::with_capacity(users.len() * self.n_artists);
        for &u in users {
            if u >= self.n_users {
                return Err(Error::Index { index: u, len: self.n_users });
            }
            weights.extend_from_slice(self.row(u));
        }
        Self::from_flat(users.len(), self.n_artists, weights, self.alpha)
    }

    /// The instance with artist columns reordered so that new column `k` is old column `perm[k]`.
    pub fn permute_artists(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_artists)?;
        let weights = self
            .rows()
            .flat_map(|row| perm.iter().map(move |&j| row[j]))
            .collect();
        Ok(Instance { weights, ..*self })
    }

    /// The instance with user rows reordered so that new row `k` is old row `perm[k]`.
    pub fn permute_users(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_users)?;
        self.select_users(perm)
    }
}

pub(crate) fn check_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::Dimension { expected: len, got: perm.len() });
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len {
            return Err(Error::Index { index: p, len });
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::Parameter(format!("index {p} repeated in permutation")));
        }
    }
    Ok(())
}

/// Per-artist payments produced by a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentVector {
    pub payments: Vec<f64>,
}

impl PaymentVector {
    /// Wraps raw payments, clamping cancellation noise to zero.
    pub fn new(mut payments: Vec<f64>) -> Self {
        for p in &mut payments {
            if p.abs() < CLAMP_EPS {
                *p = 0.0;
            }
        }
        PaymentVector { payments }
    }

    pub fn len(&self) -> usize {
        self.payments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payments.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.payments.iter().sum()
    }

    /// Sum of payments over an artist set.
    pub fn subset_payment(&self, artists: &[usize]) -> Result<f64> {
        artists.iter().try_fold(0.0, |acc, &j| {
            self.payments
                .get(j)
                .map(|p| acc + p)
                .ok_or(Error::Index { index: j, len: self.payments.len() })
        })
    }
}

/// Sum of payments over an artist set.
pub fn subset_payment(p: &PaymentVector, artists: &[usize]) -> Result<f64> {
    p.subset_payment(artists)
}
