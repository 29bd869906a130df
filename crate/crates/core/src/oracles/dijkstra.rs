use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::Se2Grid;
use crate::se2::MetricParams;

/// Lattice graph whose edges join sites at most `radius` cells apart in each
/// spatial axis and `radius` steps apart in orientation (cyclically), weighted
/// by `ρ_b` of the relative element.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    grid: Se2Grid,
    metric: MetricParams,
    radius: usize,
    /// `weights[kh][edge]` with edges listed in `offsets`.
    weights: Vec<Vec<f64>>,
    offsets: Vec<(isize, isize, isize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    site: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.site.cmp(&self.site))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GeodesicGraph {
    pub fn new(grid: Se2Grid, metric: MetricParams, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::bad_config("neighbor radius must be at least 1"));
        }
        let r = radius as isize;
        let nt = grid.ntheta() as isize;
        // Orientation steps beyond half a turn would revisit the same slice.
        let rk = r.min(nt / 2);
        let mut offsets = Vec::new();
        for dk in -rk..=rk {
            if nt % 2 == 0 && dk == -nt / 2 && rk == nt / 2 {
                continue;
            }
            for dj in -r..=r {
                for di in -r..=r {
                    if (di, dj, dk) != (0, 0, 0) {
                        offsets.push((di, dj, dk));
                    }
                }
            }
        }
        let weights = (0..grid.ntheta())
            .map(|kh| {
                let h = grid.site(grid.index(0, 0, kh));
                offsets
                    .iter()
                    .map(|&(di, dj, dk)| {
                        let kg = (kh as isize + dk).rem_euclid(nt) as usize;
                        let mut g = grid.site(grid.index(0, 0, kg));
                        g.x += di as f64 * grid.dx();
                        g.y += dj as f64 * grid.dy();
                        metric.rho_b(&h.relative_to(&g))
                    })
                    .collect()
            })
            .collect();
        Ok(GeodesicGraph {
            grid,
            metric,
            radius,
            weights,
            offsets,
        })
    }

    pub fn grid(&self) -> &Se2Grid {
        &self.grid
    }

    pub fn metric(&self) -> &MetricParams {
        &self.metric
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn neighbors(&self, site: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (ix, iy, k) = self.grid.unravel(site);
        let (nx, ny, nt) = (
            self.grid.nx() as isize,
            self.grid.ny() as isize,
            self.grid.ntheta() as isize,
        );
        self.offsets
            .iter()
            .zip(&self.weights[k])
            .filter_map(move |(&(di, dj, dk), &w)| {
                let (x, y) = (ix as isize + di, iy as isize + dj);
                if x < 0 || y < 0 || x >= nx || y >= ny {
                    return None;
                }
                let kk = (k as isize + dk).rem_euclid(nt) as usize;
                Some((self.grid.index(x as usize, y as usize, kk), w))
            })
    }

    fn search(&self, source: usize, stop_at: Option<usize>) -> (Vec<f64>, Vec<usize>) {
        let n = self.grid.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { dist: 0.0, site: source });
        while let Some(Entry { dist: d, site }) = heap.pop() {
            if d > dist[site] {
                continue;
            }
            if stop_at == Some(site) {
                break;
            }
            for (next, w) in self.neighbors(site) {
                let nd = d + w;
                if nd < dist[next] {
                    dist[next] = nd;
                    pred[next] = site;
                    heap.push(Entry { dist: nd, site: next });
                }
            }
        }
        (dist, pred)
    }

    /// Shortest-path distance from `source` to every site.
    pub fn distance_map(&self, source: usize) -> Vec<f64> {
        self.search(source, None).0
    }

    /// A shortest path from `source` to `target`, both included.
    pub fn path(&self, source: usize, target: usize) -> Result<Vec<usize>> {
        let (dist, pred) = self.search(source, Some(target));
        if !dist[target].is_finite() {
            return Err(Error::Unreachable {
                source_site: source,
                target,
            });
        }
        let mut path = vec![target];
        let mut at = target;
        while at != source {
            at = pred[at];
            path.push(at);
        }
        path.reverse();
        Ok(path)
    }

    /// Sum of edge weights along consecutive sites of `path`.
    pub fn path_length(&self, path: &[usize]) -> f64 {
        path.windows(2)
            .map(|w| {
                self.neighbors(w[0])
                    .find(|(s, _)| *s == w[1])
                    .map_or(f64::INFINITY, |(_, wt)| wt)
            })
            .sum()
    }
}

pub fn dijkstra_distance_map(graph: &GeodesicGraph, source: usize) -> Vec<f64> {
    graph.distance_map(source)
}

pub fn geodesic_path(graph: &GeodesicGraph, source: usize, target: usize) -> Result<Vec<usize>> {
    graph.path(source, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(r: usize) -> GeodesicGraph {
        let g = Se2Grid::new(12, 12, 8, [0.0, 12.0, 0.0, 12.0]).unwrap();
        GeodesicGraph::new(g, MetricParams::new(1.0, 2.0, 1.0).unwrap(), r).unwrap()
    }

    #[test]
    fn source_is_zero_and_aligned_translation_is_straight() {
        let gr = graph(2);
        let g = *gr.grid();
        // θ = 0 is k = 4 on eight orientations.
        let s = g.index(2, 5, 4);
        let d = gr.distance_map(s);
        assert_eq!(d[s], 0.0);
        assert!((d[g.index(9, 5, 4)] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_never_increases_distance() {
        let (a, b) = (graph(1), graph(2));
        let s = a.grid().index(6, 6, 1);
        for (x, y) in a.distance_map(s).iter().zip(b.distance_map(s)) {
            assert!(y <= x + 1e-12);
        }
    }

    #[test]
    fn symmetric_distances() {
        let gr = graph(2);
        let g = *gr.grid();
        let pairs = [(g.index(1, 2, 0), g.index(9, 7, 5)), (g.index(4, 4, 3), g.index(5, 11, 6))];
        for (a, b) in pairs {
            let dab = gr.distance_map(a)[b];
            let dba = gr.distance_map(b)[a];
            assert!((dab - dba).abs() < 1e-12);
        }
    }

    #[test]
    fn path_length_matches_distance() {
        let gr = graph(2);
        let g = *gr.grid();
        let (s, t) = (g.index(1, 1, 0), g.index(10, 8, 3));
        let p = gr.path(s, t).unwrap();
        assert_eq!((p[0], *p.last().unwrap()), (s, t));
        assert!((gr.path_length(&p) - gr.distance_map(s)[t]).abs() < 1e-12);
        assert_eq!(gr.path(s, s).unwrap(), vec![s]);
    }

    #[test]
    fn zero_radius_is_rejected() {
        let g = Se2Grid::new(4, 4, 4, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(GeodesicGraph::new(g, MetricParams::isotropic(), 0).is_err());
    }
}
