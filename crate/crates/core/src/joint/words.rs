//! Word enumeration over a finite alphabet `0..k`.

/// Words produced by an enumerator, possibly cut short by a cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    pub words: Vec<Vec<usize>>,
    pub truncated: bool,
}

/// All `k^m` words of length `m` in lexicographic order, up to `cap` of them.
pub fn words(k: usize, m: usize, cap: usize) -> WordList {
    let mut out = Vec::new();
    if k == 0 || m == 0 {
        return WordList { words: out, truncated: false };
    }
    let mut w = vec![0usize; m];
    loop {
        if out.len() == cap {
            return WordList { words: out, truncated: true };
        }
        out.push(w.clone());
        // Odometer increment from the right.
        let mut pos = m;
        loop {
            if pos == 0 {
                return WordList { words: out, truncated: false };
            }
            pos -= 1;
            w[pos] += 1;
            if w[pos] < k {
                break;
            }
            w[pos] = 0;
        }
    }
}

/// Lexicographically minimal representatives of the rotation classes of
/// words of length `m` (necklaces), generated by the
/// Fredricksen-Kessler-Maiorana recursion.
pub fn necklaces(k: usize, m: usize, cap: usize) -> WordList {
    let mut list = WordList { words: Vec::new(), truncated: false };
    if k == 0 || m == 0 {
        return list;
    }
    let mut a = vec![0usize; m + 1];
    fkm(1, 1, k, m, cap, &mut a, &mut list);
    list
}

fn fkm(t: usize, p: usize, k: usize, m: usize, cap: usize, a: &mut [usize], out: &mut WordList) {
    if out.truncated {
        return;
    }
    if t > m {
        if m.is_multiple_of(p) {
            if out.words.len() == cap {
                out.truncated = true;
            } else {
                out.words.push(a[1..=m].to_vec());
            }
        }
        return;
    }
    a[t] = a[t - p];
    fkm(t + 1, p, k, m, cap, a, out);
    for j in (a[t - p] + 1)..k {
        a[t] = j;
        fkm(t + 1, t, k, m, cap, a, out);
    }
}
