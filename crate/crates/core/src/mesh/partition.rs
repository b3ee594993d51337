use super::{Mesh, MeshError};

/// Recursive coordinate bisection of element centroids into `nparts`
/// contiguous-in-space parts. Part sizes differ by at most one element.
/// Ties in the sort key break by element id, so the result is deterministic.
pub fn partition(mesh: &Mesh, nparts: usize) -> Result<Vec<usize>, MeshError> {
    let n = mesh.num_elements();
    if nparts == 0 || nparts > n {
        return Err(MeshError::Partition(format!("{nparts} parts for {n} elements")));
    }
    let centroids: Vec<[f64; 3]> = (0..n).map(|e| mesh.centroid(e)).collect();
    let mut ids: Vec<usize> = (0..n).collect();
    let mut out = vec![0; n];
    bisect(&centroids, &mut ids, 0, nparts, &mut out);
    Ok(out)
}

fn bisect(c: &[[f64; 3]], ids: &mut [usize], first_part: usize, nparts: usize, out: &mut [usize]) {
    if nparts == 1 {
        for &e in ids.iter() {
            out[e] = first_part;
        }
        return;
    }
    let n = ids.len();
    let left_parts = nparts / 2;
    // the first n % nparts parts receive one extra element
    let base = n / nparts;
    let extra = n % nparts;
    let n_left = left_parts * base + extra.min(left_parts);

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &e in ids.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(c[e][k]);
            hi[k] = hi[k].max(c[e][k]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
        .unwrap();
    ids.sort_by(|&a, &b| c[a][axis].total_cmp(&c[b][axis]).then(a.cmp(&b)));
    let (left, right) = ids.split_at_mut(n_left);
    bisect(c, left, first_part, left_parts, out);
    bisect(c, right, first_part + left_parts, nparts - left_parts, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, AnnulusSector};

    fn sizes(p: &[usize], n: usize) -> Vec<usize> {
        let mut s = vec![0; n];
        for &x in p {
            s[x] += 1;
        }
        s
    }

    #[test]
    fn exact_division() {
        let m = unit_square(4, None).unwrap();
        let p = partition(&m, 4).unwrap();
        assert_eq!(sizes(&p, 4), vec![8, 8, 8, 8]);
    }

    #[test]
    fn single_part() {
        let m = unit_square(3, None).unwrap();
        assert!(partition(&m, 1).unwrap().iter().all(|&x| x == 0));
    }

    #[test]
    fn eighty_into_three() {
        let m = AnnulusSector::default().build().unwrap();
        let p = partition(&m, 3).unwrap();
        let s = sizes(&p, 3);
        // floor/ceil balance: 80 = 27 + 27 + 26
        assert!(s.iter().all(|&x| x == 26 || x == 27), "{s:?}");
        assert_eq!(s.iter().sum::<usize>(), 80);
    }

    #[test]
    fn invalid_counts() {
        let m = unit_square(1, None).unwrap();
        assert!(partition(&m, 0).is_err());
        assert!(partition(&m, 3).is_err());
    }

    #[test]
    fn deterministic() {
        let m = AnnulusSector::default().build().unwrap();
        assert_eq!(partition(&m, 5).unwrap(), partition(&m, 5).unwrap());
    }
}
