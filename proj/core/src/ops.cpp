#include "liftaug/ops.hpp"

#include <cmath>

#include "liftaug/errors.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

namespace {

Tape& tape_of(Value a, Value b) {
    if (a.tape() != b.tape()) throw ContractError("operands recorded on different tapes");
    return *a.tape();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

bool rg(Value v) { return v.tape()->requires_grad(v.index()); }

Value unary(Value x, Tensor out, std::function<Tensor(const Tensor&, const Tensor&)> grad_fn) {
    Tape& t = *x.tape();
    int ix = x.index();
    bool track = rg(x);
    return t.record(std::move(out), track, [ix, grad_fn](Tape& tp, const Tensor& g) {
        tp.accumulate(ix, grad_fn(g, tp.value(ix)));
    });
}

}  // namespace

Value add(Value a, Value b) {
    Tape& t = tape_of(a, b);
    check_same_shape(a.val(), b.val(), "add");
    Tensor out = a.val();
    out += b.val();
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        tp.accumulate(ia, g);
        tp.accumulate(ib, g);
    });
}

Value sub(Value a, Value b) {
    Tape& t = tape_of(a, b);
    check_same_shape(a.val(), b.val(), "sub");
    Tensor out = a.val();
    for (long i = 0; i < out.numel(); ++i) out[i] -= b.val()[i];
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        tp.accumulate(ia, g);
        Tensor gn = g;
        gn *= -1.0;
        tp.accumulate(ib, gn);
    });
}

Value mul(Value a, Value b) {
    Tape& t = tape_of(a, b);
    check_same_shape(a.val(), b.val(), "mul");
    Tensor out = a.val();
    for (long i = 0; i < out.numel(); ++i) out[i] *= b.val()[i];
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        Tensor ga = g, gb = g;
        for (long i = 0; i < g.numel(); ++i) {
            ga[i] *= tp.value(ib)[i];
            gb[i] *= tp.value(ia)[i];
        }
        tp.accumulate(ia, ga);
        tp.accumulate(ib, gb);
    });
}

Value div_elem(Value a, Value b) {
    Tape& t = tape_of(a, b);
    check_same_shape(a.val(), b.val(), "div");
    Tensor out = a.val();
    for (long i = 0; i < out.numel(); ++i) out[i] /= b.val()[i];
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        Tensor ga = g, gb = g;
        for (long i = 0; i < g.numel(); ++i) {
            double bv = tp.value(ib)[i];
            ga[i] /= bv;
            gb[i] *= -tp.value(ia)[i] / (bv * bv);
        }
        tp.accumulate(ia, ga);
        tp.accumulate(ib, gb);
    });
}

Value neg(Value x) { return smul(x, -1.0); }

Value relu(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return unary(x, std::move(out), [](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i)
            if (xv[i] <= 0.0) gx[i] = 0.0;
        return gx;
    });
}

Value leaky_relu(Value x, double slope) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] *= slope;
    return unary(x, std::move(out), [slope](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i)
            if (xv[i] < 0.0) gx[i] *= slope;
        return gx;
    });
}

Value vtanh(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    Tape& t = *x.tape();
    int ix = x.index(), iy = static_cast<int>(t.size());
    return t.record(std::move(out), rg(x), [ix, iy](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        const Tensor& y = tp.value(iy);
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= 1.0 - y[i] * y[i];
        tp.accumulate(ix, gx);
    });
}

Value softplus(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) {
        double v = out[i];
        out[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    }
    return unary(x, std::move(out), [](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i) gx[i] /= 1.0 + std::exp(-xv[i]);
        return gx;
    });
}

Value vexp(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
    Tape& t = *x.tape();
    int ix = x.index(), iy = static_cast<int>(t.size());
    return t.record(std::move(out), rg(x), [ix, iy](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        const Tensor& y = tp.value(iy);
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= y[i];
        tp.accumulate(ix, gx);
    });
}

Value vabs(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = std::fabs(out[i]);
    return unary(x, std::move(out), [](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i)
            gx[i] *= xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0);
        return gx;
    });
}

Value vsqrt(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = std::sqrt(out[i]);
    Tape& t = *x.tape();
    int ix = x.index(), iy = static_cast<int>(t.size());
    return t.record(std::move(out), rg(x), [ix, iy](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        const Tensor& y = tp.value(iy);
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= 0.5 / y[i];
        tp.accumulate(ix, gx);
    });
}

Value recip(Value x) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = 1.0 / out[i];
    Tape& t = *x.tape();
    int ix = x.index(), iy = static_cast<int>(t.size());
    return t.record(std::move(out), rg(x), [ix, iy](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        const Tensor& y = tp.value(iy);
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= -y[i] * y[i];
        tp.accumulate(ix, gx);
    });
}

Value clamp_max(Value x, double cap) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = std::min(out[i], cap);
    return unary(x, std::move(out), [cap](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i)
            if (xv[i] >= cap) gx[i] = 0.0;
        return gx;
    });
}

Value unary_custom(Value x, double (*f)(double), double (*df)(double)) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] = f(out[i]);
    return unary(x, std::move(out), [df](const Tensor& g, const Tensor& xv) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= df(xv[i]);
        return gx;
    });
}

Value smul(Value x, double c) {
    Tensor out = x.val();
    out *= c;
    Tape& t = *x.tape();
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix, c](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        gx *= c;
        tp.accumulate(ix, gx);
    });
}

Value sadd(Value x, double c) {
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] += c;
    Tape& t = *x.tape();
    int ix = x.index();
    return t.record(std::move(out), rg(x),
                    [ix](Tape& tp, const Tensor& g) { tp.accumulate(ix, g); });
}

Value scale(Value x, Value s) {
    Tape& t = tape_of(x, s);
    if (s.val().numel() != 1) throw ShapeError("scale: scalar operand has " + s.val().shape_str());
    double sv = s.val().item();
    Tensor out = x.val();
    out *= sv;
    int ix = x.index(), is = s.index();
    return t.record(std::move(out), rg(x) || rg(s), [ix, is, sv](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        gx *= sv;
        tp.accumulate(ix, gx);
        double acc = 0.0;
        const Tensor& xv = tp.value(ix);
        for (long i = 0; i < g.numel(); ++i) acc += g[i] * xv[i];
        tp.accumulate(is, Tensor::full(tp.value(is).shape(), acc));
    });
}

Value matmul(Value a, Value b) {
    Tape& t = tape_of(a, b);
    Tensor out = matmul_nn(a.val(), b.val());
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        tp.accumulate(ia, liftaug::matmul_nt(g, tp.value(ib)));
        tp.accumulate(ib, liftaug::matmul_tn(tp.value(ia), g));
    });
}

Value matmul_nt(Value a, Value b) {
    Tape& t = tape_of(a, b);
    Tensor out = liftaug::matmul_nt(a.val(), b.val());
    int ia = a.index(), ib = b.index();
    return t.record(std::move(out), rg(a) || rg(b), [ia, ib](Tape& tp, const Tensor& g) {
        tp.accumulate(ia, liftaug::matmul_nn(g, tp.value(ib)));
        tp.accumulate(ib, liftaug::matmul_tn(g, tp.value(ia)));
    });
}

Value transpose_v(Value x) {
    Tape& t = *x.tape();
    int ix = x.index();
    return t.record(transposed(x.val()), rg(x), [ix](Tape& tp, const Tensor& g) {
        tp.accumulate(ix, transposed(g));
    });
}

Value reshape_v(Value x, std::vector<int> shape) {
    Tape& t = *x.tape();
    Tensor out = Tensor::from(shape, x.val().raw());
    if (out.numel() != x.val().numel()) throw ShapeError("reshape changes element count");
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix](Tape& tp, const Tensor& g) {
        tp.accumulate(ix, Tensor::from(tp.value(ix).shape(), g.raw()));
    });
}

Value slice_rows(Value x, int r0, int r1) {
    Tape& t = *x.tape();
    const Tensor& xv = x.val();
    int n = xv.cols();
    if (r0 < 0 || r1 > xv.rows() || r0 >= r1) throw ShapeError("slice_rows range");
    Tensor out({r1 - r0, n});
    for (int r = r0; r < r1; ++r)
        for (int c = 0; c < n; ++c) out.at(r - r0, c) = xv.at(r, c);
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix, r0](Tape& tp, const Tensor& g) {
        Tensor gx = Tensor::zeros(tp.value(ix).shape());
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) gx.at(r0 + r, c) = g.at(r, c);
        tp.accumulate(ix, gx);
    });
}

Value slice_cols(Value x, int c0, int c1) {
    Tape& t = *x.tape();
    const Tensor& xv = x.val();
    if (c0 < 0 || c1 > xv.cols() || c0 >= c1) throw ShapeError("slice_cols range");
    Tensor out({xv.rows(), c1 - c0});
    for (int r = 0; r < xv.rows(); ++r)
        for (int c = c0; c < c1; ++c) out.at(r, c - c0) = xv.at(r, c);
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix, c0](Tape& tp, const Tensor& g) {
        Tensor gx = Tensor::zeros(tp.value(ix).shape());
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) gx.at(r, c0 + c) = g.at(r, c);
        tp.accumulate(ix, gx);
    });
}

Value stack_rows(Tape& t, std::span<const Value> rows) {
    if (rows.empty()) throw ShapeError("stack_rows: no rows");
    int n = rows[0].val().cols();
    bool track = false;
    std::vector<int> parents;
    parents.reserve(rows.size());
    Tensor out({static_cast<int>(rows.size()), n});
    for (size_t r = 0; r < rows.size(); ++r) {
        const Tensor& rv = rows[r].val();
        if (rows[r].tape() != &t) throw ContractError("stack_rows: row on a different tape");
        if (rv.rows() != 1 || rv.cols() != n) throw ShapeError("stack_rows: row shape " + rv.shape_str());
        for (int c = 0; c < n; ++c) out.at(static_cast<int>(r), c) = rv[c];
        parents.push_back(rows[r].index());
        track = track || rg(rows[r]);
    }
    return t.record(std::move(out), track, [parents, n](Tape& tp, const Tensor& g) {
        for (size_t r = 0; r < parents.size(); ++r) {
            Tensor gr = Tensor::zeros(tp.value(parents[r]).shape());
            for (int c = 0; c < n; ++c) gr[c] = g.at(static_cast<int>(r), c);
            tp.accumulate(parents[r], gr);
        }
    });
}

Value add_rowvec(Value x, Value b) {
    Tape& t = tape_of(x, b);
    const Tensor& xv = x.val();
    const Tensor& bv = b.val();
    if (bv.rows() != 1 || bv.cols() != xv.cols())
        throw ShapeError("add_rowvec: " + xv.shape_str() + " + " + bv.shape_str());
    Tensor out = xv;
    for (int r = 0; r < xv.rows(); ++r)
        for (int c = 0; c < xv.cols(); ++c) out.at(r, c) += bv[c];
    int ix = x.index(), ib = b.index();
    return t.record(std::move(out), rg(x) || rg(b), [ix, ib](Tape& tp, const Tensor& g) {
        tp.accumulate(ix, g);
        Tensor gb = Tensor::zeros(tp.value(ib).shape());
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) gb[c] += g.at(r, c);
        tp.accumulate(ib, gb);
    });
}

Value scale_rows(Value x, Value s) {
    Tape& t = tape_of(x, s);
    const Tensor& xv = x.val();
    const Tensor& sv = s.val();
    if (sv.cols() != 1 || sv.rows() != xv.rows())
        throw ShapeError("scale_rows: " + xv.shape_str() + " by " + sv.shape_str());
    Tensor out = xv;
    for (int r = 0; r < xv.rows(); ++r)
        for (int c = 0; c < xv.cols(); ++c) out.at(r, c) *= sv[r];
    int ix = x.index(), is = s.index();
    return t.record(std::move(out), rg(x) || rg(s), [ix, is](Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(ix);
        const Tensor& sv2 = tp.value(is);
        Tensor gx = g;
        Tensor gs = Tensor::zeros(sv2.shape());
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) {
                gx.at(r, c) *= sv2[r];
                gs[r] += g.at(r, c) * xv2.at(r, c);
            }
        tp.accumulate(ix, gx);
        tp.accumulate(is, gs);
    });
}

Value row_sums(Value x) {
    Tape& t = *x.tape();
    const Tensor& xv = x.val();
    Tensor out({xv.rows(), 1});
    for (int r = 0; r < xv.rows(); ++r) {
        double acc = 0.0;
        for (int c = 0; c < xv.cols(); ++c) acc += xv.at(r, c);
        out[r] = acc;
    }
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix](Tape& tp, const Tensor& g) {
        Tensor gx = Tensor::zeros(tp.value(ix).shape());
        for (int r = 0; r < gx.rows(); ++r)
            for (int c = 0; c < gx.cols(); ++c) gx.at(r, c) = g[r];
        tp.accumulate(ix, gx);
    });
}

Value sum(Value x) {
    double acc = 0.0;
    for (long i = 0; i < x.val().numel(); ++i) acc += x.val()[i];
    Tape& t = *x.tape();
    int ix = x.index();
    return t.record(Tensor::scalar(acc), rg(x), [ix](Tape& tp, const Tensor& g) {
        tp.accumulate(ix, Tensor::full(tp.value(ix).shape(), g[0]));
    });
}

Value mean(Value x) {
    long n = x.val().numel();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += x.val()[i];
    Tape& t = *x.tape();
    int ix = x.index();
    return t.record(Tensor::scalar(acc / static_cast<double>(n)), rg(x),
                    [ix, n](Tape& tp, const Tensor& g) {
                        tp.accumulate(ix,
                                      Tensor::full(tp.value(ix).shape(), g[0] / static_cast<double>(n)));
                    });
}

Value linear(Value x, Value W, Value b) { return add_rowvec(matmul_nt(x, W), b); }

Value batch_norm(Tape& t, Value x, Param& gamma, Param& beta, Param& running_mean,
                 Param& running_var, bool train, bool train_params, double momentum, double eps) {
    const Tensor& xv = x.val();
    int B = xv.rows(), n = xv.cols();
    if (gamma.value.numel() != n || beta.value.numel() != n)
        throw ShapeError("batch_norm: feature width mismatch");
    Value vg = t.leaf(gamma, train_params);
    Value vb = t.leaf(beta, train_params);

    Tensor mean_row({1, n}), inv_std({1, n});
    if (train) {
        if (B < 2)
            throw ContractError("batch_norm: train mode requires a batch of at least 2 rows");
        Tensor var_row({1, n});
        for (int c = 0; c < n; ++c) {
            double m = 0.0;
            for (int r = 0; r < B; ++r) m += xv.at(r, c);
            m /= B;
            double v = 0.0;
            for (int r = 0; r < B; ++r) {
                double d = xv.at(r, c) - m;
                v += d * d;
            }
            mean_row[c] = m;
            var_row[c] = v / B;
        }
        for (int c = 0; c < n; ++c) inv_std[c] = 1.0 / std::sqrt(var_row[c] + eps);
        double unbias = static_cast<double>(B) / (B - 1);
        for (int c = 0; c < n; ++c) {
            running_mean.value[c] = (1.0 - momentum) * running_mean.value[c] + momentum * mean_row[c];
            running_var.value[c] =
                (1.0 - momentum) * running_var.value[c] + momentum * var_row[c] * unbias;
        }
    } else {
        for (int c = 0; c < n; ++c) {
            mean_row[c] = running_mean.value[c];
            inv_std[c] = 1.0 / std::sqrt(running_var.value[c] + eps);
        }
    }

    Tensor xhat({B, n}), out({B, n});
    for (int r = 0; r < B; ++r)
        for (int c = 0; c < n; ++c) {
            double h = (xv.at(r, c) - mean_row[c]) * inv_std[c];
            xhat.at(r, c) = h;
            out.at(r, c) = h * gamma.value[c] + beta.value[c];
        }

    int ix = x.index(), ig = vg.index(), ib = vb.index();
    bool track = t.requires_grad(ix) || train_params;
    return t.record(
        std::move(out), track,
        [ix, ig, ib, xhat, inv_std, train, B, n](Tape& tp, const Tensor& g) {
            const Tensor& gam = tp.value(ig);
            Tensor dgamma({1, n}), dbeta({1, n});
            for (int r = 0; r < B; ++r)
                for (int c = 0; c < n; ++c) {
                    dgamma[c] += g.at(r, c) * xhat.at(r, c);
                    dbeta[c] += g.at(r, c);
                }
            tp.accumulate(ig, dgamma);
            tp.accumulate(ib, dbeta);
            if (!tp.requires_grad(ix)) return;
            Tensor gx({B, n});
            if (train) {
                // dL/dx through the batch statistics
                for (int c = 0; c < n; ++c) {
                    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                    for (int r = 0; r < B; ++r) {
                        double dxh = g.at(r, c) * gam[c];
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xhat.at(r, c);
                    }
                    for (int r = 0; r < B; ++r) {
                        double dxh = g.at(r, c) * gam[c];
                        gx.at(r, c) = inv_std[c] / B *
                                      (B * dxh - sum_dxhat - xhat.at(r, c) * sum_dxhat_xhat);
                    }
                }
            } else {
                for (int r = 0; r < B; ++r)
                    for (int c = 0; c < n; ++c) gx.at(r, c) = g.at(r, c) * gam[c] * inv_std[c];
            }
            tp.accumulate(ix, gx);
        });
}

Value dropout(Value x, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
    if (!train || rate == 0.0) return x;
    Tape& t = *x.tape();
    double keep = 1.0 - rate;
    Tensor mask(x.val().shape());
    for (long i = 0; i < mask.numel(); ++i) mask[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    Tensor out = x.val();
    for (long i = 0; i < out.numel(); ++i) out[i] *= mask[i];
    int ix = x.index();
    return t.record(std::move(out), rg(x), [ix, mask](Tape& tp, const Tensor& g) {
        Tensor gx = g;
        for (long i = 0; i < gx.numel(); ++i) gx[i] *= mask[i];
        tp.accumulate(ix, gx);
    });
}

}  // namespace liftaug
