//! Beam selection and two-user clustering on the analog codebook.
//!
//! The M analog beams are one interleaved codebook family (columns spaced
//! K/M apart). Each candidate user attaches to its strongest selected
//! beam; per beam the retained pair is the candidate pair with the largest
//! effective-channel norm gap, which gives NOMA the strong/weak asymmetry
//! it feeds on. Ties of any kind resolve to the lowest index.

use num_complex::Complex;

use crate::channel::{effective_channel, ChannelSet, Codebook};
use crate::error::{Error, Result};
use crate::linalg::{norm2, CMat};
use crate::scalar::Scalar;

/// Per-column receive powers `|f_k^H h|^2` of one user channel.
pub fn measure_beam_strength<T: Scalar>(codebook: &Codebook<T>, h: &[Complex<T>]) -> Vec<T> {
    (0..codebook.size())
        .map(|k| {
            let eff = effective_channel(codebook, &[k], h);
            eff[0].norm_sqr()
        })
        .collect()
}

/// Columns of one interleaved beam family: `{family, family + K/M, ...}`
/// (indices from zero). `family` must lie below `K/M`.
pub fn select_beams(codebook_size: usize, n_rf: usize, family: usize) -> Result<Vec<usize>> {
    if n_rf == 0 || !codebook_size.is_multiple_of(n_rf) {
        return Err(Error::InvalidConfig(format!(
            "n_rf {n_rf} must be positive and divide codebook_size {codebook_size}"
        )));
    }
    let stride = codebook_size / n_rf;
    if family >= stride {
        return Err(Error::InvalidConfig(format!(
            "family {family} out of range; codebook of {codebook_size} with {n_rf} beams has {stride} families"
        )));
    }
    Ok((0..n_rf).map(|m| family + m * stride).collect())
}

/// The clustered system: selected beams, the analog combining matrix, and
/// the retained strong/weak user pair per beam.
#[derive(Clone, Debug)]
pub struct BeamPlan<T> {
    /// Codebook column index per beam.
    pub selected_beams: Vec<usize>,
    /// Analog combiner W (M x N); row m is `f_{k_m}^H`.
    pub combiner: CMat<T>,
    /// Per beam: indices into the candidate [`ChannelSet`], strong first.
    pub pairs: Vec<[usize; 2]>,
    /// Effective channels `W h` of the retained users, strong first.
    pub effective: Vec<[Vec<Complex<T>>; 2]>,
}

impl<T: Scalar> BeamPlan<T> {
    pub fn n_beams(&self) -> usize {
        self.selected_beams.len()
    }

    pub fn effective(&self, beam: usize, slot: usize) -> &[Complex<T>] {
        &self.effective[beam][slot]
    }

    pub fn eff_norm2(&self, beam: usize, slot: usize) -> T {
        norm2(&self.effective[beam][slot])
    }

    /// All user slots in (beam, slot) order; slot 0 is the strong user.
    pub fn slots(&self) -> impl Iterator<Item = (usize, usize)> {
        let beams = self.n_beams();
        (0..beams).flat_map(|m| [(m, 0), (m, 1)])
    }
}

/// Attaches every candidate to its strongest selected beam and retains,
/// per beam, the pair with the largest effective-channel norm difference.
/// Errors when a beam ends up with fewer than two candidates.
pub fn cluster_users<T: Scalar>(
    codebook: &Codebook<T>,
    selected_beams: &[usize],
    channels: &ChannelSet<T>,
) -> Result<BeamPlan<T>> {
    assert_eq!(
        channels.n_antennas,
        codebook.n_antennas(),
        "channel set and codebook must share the array"
    );
    let m_beams = selected_beams.len();

    // Strongest selected beam per candidate, lowest index winning ties.
    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); m_beams];
    for (u, user) in channels.users.iter().enumerate() {
        let mut best_beam = 0usize;
        let mut best = T::neg_infinity();
        for (j, &k) in selected_beams.iter().enumerate() {
            let strength = effective_channel(codebook, &[k], &user.h)[0].norm_sqr();
            if strength > best {
                best = strength;
                best_beam = j;
            }
        }
        attached[best_beam].push(u);
    }

    let mut pairs = Vec::with_capacity(m_beams);
    let mut effective = Vec::with_capacity(m_beams);
    for (j, candidates) in attached.iter().enumerate() {
        if candidates.len() < 2 {
            return Err(Error::BeamUnderfilled {
                beam: selected_beams[j],
                count: candidates.len(),
            });
        }
        let norms: Vec<T> = candidates
            .iter()
            .map(|&u| {
                norm2(&effective_channel(
                    codebook,
                    selected_beams,
                    &channels.users[u].h,
                ))
                .sqrt()
            })
            .collect();
        // Largest norm gap; the scan order makes the lowest-index pair win
        // ties because only a strictly larger gap replaces the incumbent.
        let (mut pick_a, mut pick_b, mut best_gap) = (0usize, 1usize, T::neg_infinity());
        for a in 0..candidates.len() {
            for b in a + 1..candidates.len() {
                let gap = (norms[a] - norms[b]).abs();
                if gap > best_gap {
                    best_gap = gap;
                    pick_a = a;
                    pick_b = b;
                }
            }
        }
        // Strong slot goes to the larger effective norm; equal norms keep
        // the lower candidate index in front.
        let (strong, weak) = if norms[pick_b] > norms[pick_a] {
            (pick_b, pick_a)
        } else {
            (pick_a, pick_b)
        };
        pairs.push([candidates[strong], candidates[weak]]);
        effective.push([
            effective_channel(codebook, selected_beams, &channels.users[candidates[strong]].h),
            effective_channel(codebook, selected_beams, &channels.users[candidates[weak]].h),
        ]);
    }

    let combiner_rows: Vec<Vec<Complex<T>>> = selected_beams
        .iter()
        .map(|&k| codebook.column(k).iter().map(|x| x.conj()).collect())
        .collect();

    Ok(BeamPlan {
        selected_beams: selected_beams.to_vec(),
        combiner: CMat::from_rows(&combiner_rows),
        pairs,
        effective,
    })
}
