//! Globally adaptive Gauss-Kronrod quadrature with Wynn epsilon
//! extrapolation (the QUADPACK `qags` scheme).
//!
//! Interval bookkeeping follows the reference implementation closely,
//! including its one-based indexing, so that the control flow can be
//! checked line by line against it.

#![allow(clippy::excessive_precision, clippy::needless_range_loop, clippy::explicit_counter_loop)]

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452803,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const EPMACH: f64 = f64::EPSILON;
const UFLOW: f64 = f64::MIN_POSITIVE;
const OFLOW: f64 = f64::MAX;

/// Termination state, mirroring the reference `ier` codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadStatus {
    Converged,
    SubdivisionLimit,
    Roundoff,
    BadIntegrand,
    ExtrapolationStalled,
    Divergent,
    InvalidInput,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub intervals: usize,
    pub status: QuadStatus,
}

struct Rule {
    result: f64,
    abserr: f64,
    resabs: f64,
    resasc: f64,
}

/// 21-point Kronrod rule with the embedded 10-point Gauss estimate.
fn qk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Rule {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut resg = 0.0;
    let fc = f(centr);
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        let fsum = f1 + f2;
        resg += WG[j] * fsum;
        resk += WGK[jtw] * fsum;
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        let fsum = f1 + f2;
        resk += WGK[jtwm1] * fsum;
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > UFLOW / (50.0 * EPMACH) {
        abserr = abserr.max(EPMACH * 50.0 * resabs);
    }
    Rule {
        result,
        abserr,
        resabs,
        resasc,
    }
}

/// Wynn epsilon table. `epstab` and `res3la` are one-based (index 0 unused).
struct Epsilon {
    epstab: [f64; 53],
    res3la: [f64; 4],
    nres: usize,
}

impl Epsilon {
    fn new() -> Self {
        Epsilon {
            epstab: [0.0; 53],
            res3la: [0.0; 4],
            nres: 0,
        }
    }

    /// Extends the table with its `n`-th element already stored and returns
    /// the extrapolated limit with an error estimate; `n` may shrink.
    fn extrapolate(&mut self, n: &mut usize) -> (f64, f64) {
        let e = &mut self.epstab;
        self.nres += 1;
        let mut abserr = OFLOW;
        let mut result = e[*n];
        if *n < 3 {
            abserr = abserr.max(5.0 * EPMACH * result.abs());
            return (result, abserr);
        }
        let limexp = 50;
        e[*n + 2] = e[*n];
        let newelm = (*n - 1) / 2;
        e[*n] = OFLOW;
        let num = *n;
        let mut k1 = *n;
        let mut converged = false;
        for i in 1..=newelm {
            let k2 = k1 - 1;
            let k3 = k1 - 2;
            let res = e[k1 + 2];
            let e0 = e[k3];
            let e1 = e[k2];
            let e2 = res;
            let e1abs = e1.abs();
            let delta2 = e2 - e1;
            let err2 = delta2.abs();
            let tol2 = e2.abs().max(e1abs) * EPMACH;
            let delta3 = e1 - e0;
            let err3 = delta3.abs();
            let tol3 = e1abs.max(e0.abs()) * EPMACH;
            if err2 <= tol2 && err3 <= tol3 {
                // e0, e1, e2 agree to machine accuracy.
                result = res;
                abserr = err2 + err3;
                converged = true;
                break;
            }
            let e3 = e[k1];
            e[k1] = e1;
            let delta1 = e1 - e3;
            let err1 = delta1.abs();
            let tol1 = e1abs.max(e3.abs()) * EPMACH;
            if err1 <= tol1 || err2 <= tol2 || err3 <= tol3 {
                *n = i + i - 1;
                break;
            }
            let ss = 1.0 / delta1 + 1.0 / delta2 - 1.0 / delta3;
            let epsinf = (ss * e1).abs();
            if epsinf <= 1e-4 {
                *n = i + i - 1;
                break;
            }
            let res = e1 + 1.0 / ss;
            e[k1] = res;
            k1 -= 2;
            let error = err2 + (res - e2).abs() + err3;
            if error <= abserr {
                abserr = error;
                result = res;
            }
        }
        if !converged {
            if *n == limexp {
                *n = 2 * (limexp / 2) - 1;
            }
            let mut ib = if num.is_multiple_of(2) { 2 } else { 1 };
            for _ in 1..=newelm + 1 {
                let ib2 = ib + 2;
                e[ib] = e[ib2];
                ib = ib2;
            }
            if num != *n {
                let mut indx = num - *n + 1;
                for i in 1..=*n {
                    e[i] = e[indx];
                    indx += 1;
                }
            }
            if self.nres < 4 {
                self.res3la[self.nres] = result;
                abserr = OFLOW;
            } else {
                let r = &mut self.res3la;
                abserr = (result - r[3]).abs() + (result - r[2]).abs() + (result - r[1]).abs();
                r[1] = r[2];
                r[2] = r[3];
                r[3] = result;
            }
        }
        abserr = abserr.max(5.0 * EPMACH * result.abs());
        (result, abserr)
    }
}

/// Keeps `iord` ordered by decreasing error for the intervals that can
/// still be bisected. All arrays are one-based.
fn qpsrt(limit: usize, last: usize, maxerr: &mut usize, ermax: &mut f64, elist: &[f64], iord: &mut [usize], nrmax: &mut usize) {
    if last <= 2 {
        iord[1] = 1;
        iord[2] = 2;
    } else {
        let errmax = elist[*maxerr];
        if *nrmax != 1 {
            for _ in 1..*nrmax {
                let isucc = iord[*nrmax - 1];
                if errmax <= elist[isucc] {
                    break;
                }
                iord[*nrmax] = isucc;
                *nrmax -= 1;
            }
        }
        let jupbn = if last > limit / 2 + 2 { limit + 3 - last } else { last };
        let errmin = elist[last];
        let jbnd = jupbn - 1;
        let ibeg = *nrmax + 1;
        let mut placed = false;
        if ibeg <= jbnd {
            for i in ibeg..=jbnd {
                let isucc = iord[i];
                if errmax >= elist[isucc] {
                    iord[i - 1] = *maxerr;
                    let mut k = jbnd;
                    let mut inserted = false;
                    for _ in i..=jbnd {
                        let isucc = iord[k];
                        if errmin < elist[isucc] {
                            iord[k + 1] = last;
                            inserted = true;
                            break;
                        }
                        iord[k + 1] = isucc;
                        k -= 1;
                    }
                    if !inserted {
                        iord[i] = last;
                    }
                    placed = true;
                    break;
                }
                iord[i - 1] = isucc;
            }
        }
        if !placed {
            iord[jbnd] = *maxerr;
            iord[jupbn] = last;
        }
    }
    *maxerr = iord[*nrmax];
    *ermax = elist[*maxerr];
}

/// Integrates `f` over `[a, b]` to `max(epsabs, epsrel·|I|)` with at most
/// `limit` subintervals.
pub fn qags<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, epsabs: f64, epsrel: f64, limit: usize) -> QuadResult {
    let done = |value, abs_error, last: usize, ier: u8| QuadResult {
        value,
        abs_error,
        evaluations: 42 * last.max(1) - 21,
        intervals: last.max(1),
        status: match ier {
            0 => QuadStatus::Converged,
            1 => QuadStatus::SubdivisionLimit,
            2 => QuadStatus::Roundoff,
            3 => QuadStatus::BadIntegrand,
            4 => QuadStatus::ExtrapolationStalled,
            5 => QuadStatus::Divergent,
            _ => QuadStatus::InvalidInput,
        },
    };
    if limit < 1 || (epsabs <= 0.0 && epsrel < (50.0 * EPMACH).max(0.5e-28)) {
        return done(0.0, 0.0, 0, 6);
    }

    let n = limit + 1;
    let mut alist = vec![0.0; n];
    let mut blist = vec![0.0; n];
    let mut rlist = vec![0.0; n];
    let mut elist = vec![0.0; n];
    let mut iord = vec![0usize; n + 1];
    alist[1] = a;
    blist[1] = b;

    let mut ier: u8 = 0;
    let mut ierro = 0;
    let first = qk21(&mut f, a, b);
    let mut result = first.result;
    let mut abserr = first.abserr;
    let defabs = first.resabs;
    let resabs = first.resasc;
    let dres = result.abs();
    let mut errbnd = epsabs.max(epsrel * dres);
    let mut last = 1;
    rlist[1] = result;
    elist[1] = abserr;
    iord[1] = 1;
    if abserr <= 100.0 * EPMACH * defabs && abserr > errbnd {
        ier = 2;
    }
    if limit == 1 {
        ier = 1;
    }
    if ier != 0 || (abserr <= errbnd && abserr != resabs) || abserr == 0.0 {
        return done(result, abserr, last, ier);
    }

    let mut eps = Epsilon::new();
    eps.epstab[1] = result;
    let mut errmax = abserr;
    let mut maxerr = 1;
    let mut area = result;
    let mut errsum = abserr;
    abserr = OFLOW;
    let mut nrmax = 1;
    let mut numrl2 = 2;
    let mut ktmin = 0;
    let mut extrap = false;
    let mut noext = false;
    let (mut iroff1, mut iroff2, mut iroff3) = (0, 0, 0);
    let ksgn: i32 = if dres >= (1.0 - 50.0 * EPMACH) * defabs { 1 } else { -1 };
    let mut small = 0.0;
    let mut erlarg = 0.0;
    let mut ertest = 0.0;
    let mut correc = 0.0;

    let mut sum_all = false;
    'outer: for l in 2..=limit {
        last = l;
        let a1 = alist[maxerr];
        let b1 = 0.5 * (alist[maxerr] + blist[maxerr]);
        let a2 = b1;
        let b2 = blist[maxerr];
        let erlast = errmax;
        let left = qk21(&mut f, a1, b1);
        let right = qk21(&mut f, a2, b2);
        let (area1, error1, defab1) = (left.result, left.abserr, left.resasc);
        let (area2, error2, defab2) = (right.result, right.abserr, right.resasc);

        let area12 = area1 + area2;
        let erro12 = error1 + error2;
        errsum = errsum + erro12 - errmax;
        area = area + area12 - rlist[maxerr];
        if defab1 != error1 && defab2 != error2 {
            if (rlist[maxerr] - area12).abs() <= 1e-5 * area12.abs() && erro12 >= 0.99 * errmax {
                if extrap {
                    iroff2 += 1;
                } else {
                    iroff1 += 1;
                }
            }
            if last > 10 && erro12 > errmax {
                iroff3 += 1;
            }
        }
        rlist[maxerr] = area1;
        rlist[last] = area2;
        errbnd = epsabs.max(epsrel * area.abs());

        if iroff1 + iroff2 >= 10 || iroff3 >= 20 {
            ier = 2;
        }
        if iroff2 >= 5 {
            ierro = 3;
        }
        if last == limit {
            ier = 1;
        }
        if a1.abs().max(b2.abs()) <= (1.0 + 100.0 * EPMACH) * (a2.abs() + 1000.0 * UFLOW) {
            ier = 4;
        }

        if error2 > error1 {
            alist[maxerr] = a2;
            alist[last] = a1;
            blist[last] = b1;
            rlist[maxerr] = area2;
            rlist[last] = area1;
            elist[maxerr] = error2;
            elist[last] = error1;
        } else {
            alist[last] = a2;
            blist[maxerr] = b1;
            blist[last] = b2;
            elist[maxerr] = error1;
            elist[last] = error2;
        }
        qpsrt(limit, last, &mut maxerr, &mut errmax, &elist, &mut iord, &mut nrmax);

        if errsum <= errbnd {
            sum_all = true;
            break;
        }
        if ier != 0 {
            break;
        }
        if last == 2 {
            small = (b - a).abs() * 0.375;
            erlarg = errsum;
            ertest = errbnd;
            eps.epstab[2] = area;
            continue;
        }
        if noext {
            continue;
        }
        erlarg -= erlast;
        if (b1 - a1).abs() > small {
            erlarg += erro12;
        }
        if !extrap {
            // Bisect only large intervals until the smallest one is reached.
            if (blist[maxerr] - alist[maxerr]).abs() > small {
                continue;
            }
            extrap = true;
            nrmax = 2;
        }
        if ierro != 3 && erlarg > ertest {
            // Keep bisecting the large intervals before extrapolating.
            let id = nrmax;
            let jupbnd = if last > 2 + limit / 2 { limit + 3 - last } else { last };
            for _ in id..=jupbnd {
                maxerr = iord[nrmax];
                errmax = elist[maxerr];
                if (blist[maxerr] - alist[maxerr]).abs() > small {
                    continue 'outer;
                }
                nrmax += 1;
            }
        }
        numrl2 += 1;
        eps.epstab[numrl2] = area;
        let (reseps, abseps) = eps.extrapolate(&mut numrl2);
        ktmin += 1;
        if ktmin > 5 && abserr < 1e-3 * errsum {
            ier = 5;
        }
        if abseps < abserr {
            ktmin = 0;
            abserr = abseps;
            result = reseps;
            correc = erlarg;
            ertest = epsabs.max(epsrel * reseps.abs());
            if abserr <= ertest {
                break;
            }
        }
        if numrl2 == 1 {
            noext = true;
        }
        if ier == 5 {
            break;
        }
        maxerr = iord[1];
        errmax = elist[maxerr];
        nrmax = 1;
        extrap = false;
        small *= 0.5;
        erlarg = errsum;
    }

    if !sum_all {
        // Choose between the extrapolated value and the plain interval sum.
        if abserr == OFLOW {
            sum_all = true;
        } else if ier + ierro != 0 {
            if ierro == 3 {
                abserr += correc;
            }
            if ier == 0 {
                ier = 3;
            }
            if result != 0.0 && area != 0.0 {
                if abserr / result.abs() > errsum / area.abs() {
                    sum_all = true;
                }
            } else if abserr > errsum {
                sum_all = true;
            } else if area == 0.0 {
                return finish(result, abserr, last, ier, done);
            }
        }
        if !sum_all {
            if !(ksgn == -1 && result.abs().max(area.abs()) <= defabs * 0.01)
                && (0.01 > result / area || result / area > 100.0 || errsum > area.abs())
            {
                ier = 6;
            }
            return finish(result, abserr, last, ier, done);
        }
    }
    let total: f64 = rlist[1..=last].iter().sum();
    finish(total, errsum, last, ier, done)
}

fn finish(value: f64, err: f64, last: usize, ier: u8, done: impl Fn(f64, f64, usize, u8) -> QuadResult) -> QuadResult {
    let ier = if ier > 2 { ier - 1 } else { ier };
    done(value, err, last, ier)
}

/// [`qags`] that turns any unsuccessful termination into an error carrying
/// the best estimate. Roundoff-limited results are accepted when the error
/// bound still meets the tolerance within a factor of ten.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, epsabs: f64, epsrel: f64, limit: usize) -> Result<QuadResult> {
    let r = qags(f, a, b, epsabs, epsrel, limit);
    let tol = epsabs.max(epsrel * r.value.abs());
    let ok = match r.status {
        QuadStatus::Converged => true,
        QuadStatus::Roundoff => r.abs_error <= 10.0 * tol,
        _ => false,
    };
    if ok && r.value.is_finite() {
        Ok(r)
    } else {
        Err(Error::Quadrature {
            estimate: r.value,
            error_bound: r.abs_error,
        })
    }
}
