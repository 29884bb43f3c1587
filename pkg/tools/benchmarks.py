"""Small open hierarchical benchmark designs used for the shipped fixtures.

Each builder returns ``(DesignBuilder, tags)``. Designs cover processor-like
datapaths (tagged ``cpu``) and non-processor blocks (dsp, crypto, comm, ctrl,
arith) across a range of widths so sizes span roughly two orders of magnitude.
"""

from __future__ import annotations

from sogppa.builder import DesignBuilder


def clog2(n: int) -> int:
    return max(1, (n - 1).bit_length())


def mux_tree(m, sel, words):
    """``words[sel]`` with a binary tree of 2:1 muxes (pads with the last word)."""
    level = list(words)
    for bit in range(len(sel)):
        s = [sel[bit]]
        nxt = []
        for i in range(0, len(level), 2):
            a = level[i]
            b = level[i + 1] if i + 1 < len(level) else level[i]
            nxt.append(m.mux(s, a, b))
        level = nxt
    return level[0]


def zext(m, word, w):
    return word if len(word) == w else m.concat(word, m.const(0, w - len(word)))


# leaf modules --------------------------------------------------------------------

def alu(b, w, name="alu", rich=True):
    m = b.module(name)
    a, c, op = m.input("a", w), m.input("b", w), m.input("op", 3)
    sh = c[:clog2(w)]
    res = [m.add(a, c), m.sub(a, c), m.and_(a, c), m.or_(a, c), m.xor(a, c)]
    if rich:
        res += [m.shl(a, sh), m.shr(a, sh, signed=True), zext(m, m.lt(a, c, signed=True), w)]
    y = mux_tree(m, op, res)
    m.output("y", y)
    m.output("zero", m.not_(m.reduce("or", y)))
    return m


def regfile(b, n, w, name="regfile"):
    m = b.module(name)
    k = clog2(n)
    we, wa, wd = m.input("we", 1), m.input("waddr", k), m.input("wdata", w)
    ra1, ra2 = m.input("raddr1", k), m.input("raddr2", k)
    qs = []
    for i in range(n):
        q, connect = m.reg_feedback(w, name=f"r{i}")
        hit = m.and_(we, m.eq(wa, m.const(i, k)))
        connect(m.mux(hit, q, wd))
        qs.append(q)
    m.output("rdata1", mux_tree(m, ra1, qs))
    m.output("rdata2", mux_tree(m, ra2, qs))
    return m


def pc_unit(b, w, name="pcu"):
    m = b.module(name)
    br, tgt = m.input("branch", 1), m.input("target", w)
    pc, connect = m.reg_feedback(w, name="pc")
    inc = m.add(pc, m.const(4, w))
    connect(m.mux(br, inc, tgt))
    m.output("pc", pc)
    return m


def decoder(b, iw, k, w, name="dec"):
    m = b.module(name)
    ins = m.input("instr", iw)
    op = m.slice(ins, 0, 3)
    rd = m.slice(ins, 3, k)
    rs1 = m.slice(ins, 3 + k, k)
    rs2 = m.slice(ins, 3 + 2 * k, k)
    immw = min(w, iw - 3 - 3 * k)
    imm = zext(m, m.slice(ins, 3 + 3 * k, immw), w)
    is_br = m.eq(op, m.const(7, 3))
    is_imm = m.reduce("and", m.slice(ins, iw - 2, 2))
    for n_, v in (("op", op), ("rd", rd), ("rs1", rs1), ("rs2", rs2), ("imm", imm), ("is_br", is_br),
                  ("is_imm", is_imm)):
        m.output(n_, v)
    return m


def mac(b, w, name="mac"):
    m = b.module(name)
    a, c, clr = m.input("a", w), m.input("b", w), m.input("clr", 1)
    acc, connect = m.reg_feedback(2 * w, name="acc")
    p = m.mul(a, c, y_width=2 * w)
    s = m.add(acc, p)
    connect(m.mux(clr, s, m.const(0, 2 * w)))
    m.output("acc", acc)
    return m


def fir(b, taps, w, name="fir"):
    m = b.module(name)
    x = m.input("x", w)
    coefs = [m.input(f"c{i}", w) for i in range(taps)]
    line = [x]
    for i in range(taps - 1):
        line.append(m.reg(line[-1], name=f"z{i}"))
    prods = [m.mul(line[i], coefs[i], y_width=w + 2, signed=True) for i in range(taps)]
    while len(prods) > 1:
        nxt = [m.add(prods[i], prods[i + 1]) for i in range(0, len(prods) - 1, 2)]
        if len(prods) % 2:
            nxt.append(prods[-1])
        prods = nxt
    m.output("y", m.reg(prods[0], name="yq"))
    return m


def cipher_round(b, w, name="round"):
    m = b.module(name)
    x, key = m.input("x", w), m.input("key", w)
    t = m.xor(x, key)
    r1 = m.or_(m.shl(t, m.const(3 % w, clog2(w))), m.shr(t, m.const((w - 3) % w, clog2(w))))
    t2 = m.add(r1, key)
    nib = min(4, w)
    s = m.slice(t2, 0, nib)
    sub = m.xor(m.and_(s, m.not_(m.shr(s, m.const(1, clog2(nib))))), m.const(0b0110 & ((1 << nib) - 1), nib))
    y = m.concat(sub, m.slice(t2, nib, w - nib)) if w > nib else sub
    m.output("y", y)
    return m


def crc(b, w, taps, name="crc"):
    m = b.module(name)
    d, en = m.input("d", 1), m.input("en", 1)
    s, connect = m.reg_feedback(w, name="state")
    fb = m.xor(m.slice(s, w - 1, 1), d)
    bits = [fb]
    for i in range(1, w):
        prev = m.slice(s, i - 1, 1)
        bits.append(m.xor(prev, fb) if i in taps else prev)
    nxt = bits[0]
    for bt in bits[1:]:
        nxt = m.concat(nxt, bt)
    connect(m.mux(en, s, nxt))
    m.output("crc", s)
    return m


def lfsr(b, w, name="lfsr"):
    m = b.module(name)
    seed, load = m.input("seed", w), m.input("load", 1)
    s, connect = m.reg_feedback(w, name="s")
    fb = m.reduce("xor", m.and_(s, m.const(0b1011 | (1 << (w - 1)), w)))
    shifted = m.concat(fb, m.slice(s, 0, w - 1))
    connect(m.mux(load, shifted, seed))
    m.output("q", s)
    return m


def uart_tx(b, w, name="uart"):
    m = b.module(name)
    data, start = m.input("data", w), m.input("start", 1)
    cw = clog2(w + 2)
    sh, cs = m.reg_feedback(w + 1, name="shift")
    cnt, cc = m.reg_feedback(cw, name="cnt")
    busy = m.reduce("or", cnt)
    nsh = m.shr(sh, m.const(1, clog2(w + 1)))
    load = m.and_(start, m.not_(busy))
    cs(m.mux(load, m.mux(busy, sh, nsh), m.concat(m.const(0, 1), data)))
    dec = m.sub(cnt, m.const(1, cw))
    cc(m.mux(load, m.mux(busy, cnt, dec), m.const(w + 1, cw)))
    m.output("tx", m.slice(sh, 0, 1))
    m.output("busy", busy)
    return m


def counter(b, w, name="counter"):
    m = b.module(name)
    en, lim = m.input("en", 1), m.input("limit", w)
    q, connect = m.reg_feedback(w, name="q")
    hit = m.eq(q, lim)
    inc = m.add(q, m.const(1, w))
    connect(m.mux(en, q, m.mux(hit, inc, m.const(0, w))))
    m.output("q", q)
    m.output("hit", hit)
    return m


def fsm(b, nstates, name="fsm"):
    m = b.module(name)
    k = clog2(nstates)
    go, stop = m.input("go", 1), m.input("stop", 1)
    st, connect = m.reg_feedback(k, name="state")
    nxt = st
    for i in range(nstates):
        here = m.eq(st, m.const(i, k))
        step = m.mux(go, m.const(i, k), m.const((i + 1) % nstates, k))
        cand = m.mux(stop, step, m.const(0, k))
        nxt = m.mux(here, nxt, cand)
    connect(nxt)
    m.output("state", st)
    m.output("idle", m.eq(st, m.const(0, k)))
    return m


def arbiter(b, n, name="arb"):
    m = b.module(name)
    req = m.input("req", n)
    last, connect = m.reg_feedback(n, name="grant_q")
    mask = m.not_(m.sub(last, m.const(1, n)))
    masked = m.and_(req, mask)
    use_mask = m.reduce("or", masked)
    src = m.mux(use_mask, req, masked)
    neg = m.sub(m.const(0, n), src)
    grant = m.and_(src, neg)
    connect(grant)
    m.output("grant", grant)
    return m


def multiplier(b, w, signed, name="mult"):
    m = b.module(name)
    a, c = m.input("a", w), m.input("b", w)
    p = m.mul(m.reg(a, name="aq"), m.reg(c, name="bq"), y_width=2 * w, signed=signed)
    m.output("p", m.reg(p, name="pq"))
    return m


def divider_step(b, w, name="divstep"):
    m = b.module(name)
    r, d, q = m.input("r", w), m.input("d", w), m.input("q", w)
    r2 = m.concat(m.slice(q, w - 1, 1), m.slice(r, 0, w - 1))
    ge = m.ge(r2, d)
    diff = m.sub(r2, d)
    m.output("r_out", m.mux(ge, r2, diff))
    m.output("q_out", m.concat(ge, m.slice(q, 0, w - 1)))
    return m


def popcount(b, w, name="popc"):
    m = b.module(name)
    x = m.input("x", w)
    ow = clog2(w + 1) + 1
    acc = m.const(0, ow)
    for i in range(w):
        acc = m.add(acc, zext(m, m.slice(x, i, 1), ow))
    m.output("n", acc)
    return m


def sorter_cell(b, w, name="cmpswap"):
    m = b.module(name)
    a, c = m.input("a", w), m.input("b", w)
    lt = m.lt(a, c)
    m.output("lo", m.mux(lt, c, a))
    m.output("hi", m.mux(lt, a, c))
    return m


def gcd_core(b, w, name="gcd"):
    m = b.module(name)
    ai, bi, load = m.input("a", w), m.input("b", w), m.input("load", 1)
    x, cx = m.reg_feedback(w, name="x")
    y, cy = m.reg_feedback(w, name="y")
    xgy = m.lt(y, x)
    nx = m.mux(xgy, x, m.sub(x, y))
    ny = m.mux(xgy, m.sub(y, x), y)
    cx(m.mux(load, nx, ai))
    cy(m.mux(load, ny, bi))
    m.output("done", m.eq(x, y))
    m.output("g", x)
    return m


# top-level designs ----------------------------------------------------------------

def cpu(w, nregs, rich=True, name="cpu"):
    b = DesignBuilder(name)
    k = clog2(nregs)
    iw = max(3 + 3 * k + 4, 16)
    dec, rf, al, pcu = decoder(b, iw, k, w), regfile(b, nregs, w), alu(b, w, rich=rich), pc_unit(b, w)
    top = b.module(name)
    instr = top.input("instr", iw)
    d = top.instance(dec, {"instr": instr}, name="u_dec")
    wb, connect_wb = top.reg_feedback(w, name="wb")
    rdq, connect_rd = top.reg_feedback(k, name="rdq")
    r = top.instance(rf, {"we": top.const(1, 1), "waddr": rdq, "wdata": wb,
                          "raddr1": d["rs1"], "raddr2": d["rs2"]}, name="u_rf")
    opb = top.mux(d["is_imm"], r["rdata2"], d["imm"])
    a = top.instance(al, {"a": r["rdata1"], "b": opb, "op": d["op"]}, name="u_alu")
    connect_wb(a["y"])
    connect_rd(d["rd"])
    p = top.instance(pcu, {"branch": top.and_(d["is_br"], a["zero"]), "target": a["y"]}, name="u_pc")
    top.output("pc", p["pc"])
    top.output("result", wb)
    return b, ["cpu"]


def dual_alu_cpu(w, name="cpu2"):
    b = DesignBuilder(name)
    al = alu(b, w)
    rf = regfile(b, 4, w)
    top = b.module(name)
    op0, op1 = top.input("op0", 3), top.input("op1", 3)
    ra, rb = top.input("ra", 2), top.input("rb", 2)
    wa = top.input("wa", 2)
    wb, cwb = top.reg_feedback(w, name="wb")
    r = top.instance(rf, {"we": top.const(1, 1), "waddr": wa, "wdata": wb, "raddr1": ra, "raddr2": rb}, name="u_rf")
    y0 = top.instance(al, {"a": r["rdata1"], "b": r["rdata2"], "op": op0}, name="u_alu0")
    y1 = top.instance(al, {"a": y0["y"], "b": r["rdata2"], "op": op1}, name="u_alu1")
    cwb(y1["y"])
    top.output("y", wb)
    return b, ["cpu"]


def dsp_fir(taps, w, name):
    b = DesignBuilder(name)
    f = fir(b, taps, w)
    top = b.module(name)
    x = top.input("x", w)
    cs = {f"c{i}": top.input(f"c{i}", w) for i in range(taps)}
    y = top.instance(f, {"x": top.reg(x, name="xq"), **cs}, name="u_fir")
    top.output("y", y["y"])
    return b, ["dsp"]


def dsp_mac_array(n, w, name):
    b = DesignBuilder(name)
    mc = mac(b, w)
    top = b.module(name)
    clr = top.input("clr", 1)
    total = None
    for i in range(n):
        a, c = top.input(f"a{i}", w), top.input(f"b{i}", w)
        o = top.instance(mc, {"a": a, "b": c, "clr": clr}, name=f"u_mac{i}")
        total = o["acc"] if total is None else top.add(total, o["acc"])
    top.output("sum", top.reg(total, name="sumq"))
    return b, ["dsp"]


def crypto_rounds(n, w, name):
    b = DesignBuilder(name)
    rd = cipher_round(b, w)
    top = b.module(name)
    pt, key = top.input("pt", w), top.input("key", w)
    st, connect = top.reg_feedback(w, name="state")
    x = st
    k = key
    for i in range(n):
        x = top.instance(rd, {"x": x, "key": k}, name=f"u_r{i}")["y"]
        k = top.add(k, top.const(0x9E37 & ((1 << w) - 1) | 1, w))
    load = top.input("load", 1)
    connect(top.mux(load, x, pt))
    top.output("ct", st)
    return b, ["crypto"]


def comm_block(w, taps, name, with_uart=True):
    b = DesignBuilder(name)
    c = crc(b, w, taps)
    l = lfsr(b, w)
    u = uart_tx(b, 8) if with_uart else None
    top = b.module(name)
    d, en, seed, load = top.input("d", 1), top.input("en", 1), top.input("seed", w), top.input("load", 1)
    scr = top.instance(l, {"seed": seed, "load": load}, name="u_lfsr")
    bit = top.xor(d, top.slice(scr["q"], 0, 1))
    cr = top.instance(c, {"d": bit, "en": en}, name="u_crc")
    top.output("crc", cr["crc"])
    if u is not None:
        t = top.instance(u, {"data": top.slice(cr["crc"], 0, 8) if w >= 8 else zext(top, cr["crc"], 8),
                             "start": en}, name="u_uart")
        top.output("tx", t["tx"])
    return b, ["comm"]


def ctrl_block(w, nstates, name, n_counters=2):
    b = DesignBuilder(name)
    cnt = counter(b, w)
    f = fsm(b, nstates)
    top = b.module(name)
    go, stop = top.input("go", 1), top.input("stop", 1)
    lim = top.input("limit", w)
    s = top.instance(f, {"go": go, "stop": stop}, name="u_fsm")
    hits = []
    for i in range(n_counters):
        o = top.instance(cnt, {"en": top.not_(s["idle"]), "limit": lim}, name=f"u_cnt{i}")
        hits.append(o["hit"])
        top.output(f"q{i}", o["q"])
    h = hits[0]
    for x in hits[1:]:
        h = top.or_(h, x)
    top.output("any_hit", h)
    top.output("state", s["state"])
    return b, ["ctrl"]


def arb_block(n, name):
    b = DesignBuilder(name)
    a = arbiter(b, n)
    top = b.module(name)
    req = top.input("req", n)
    g = top.instance(a, {"req": req}, name="u_arb")
    top.output("grant", top.reg(g["grant"], name="gq"))
    return b, ["ctrl"]


def arith_mult(w, signed, name):
    b = DesignBuilder(name)
    mu = multiplier(b, w, signed)
    top = b.module(name)
    a, c = top.input("a", w), top.input("b", w)
    o = top.instance(mu, {"a": a, "b": c}, name="u_mul")
    top.output("p", o["p"])
    return b, ["arith"]


def arith_divider(w, steps, name):
    b = DesignBuilder(name)
    ds = divider_step(b, w)
    top = b.module(name)
    n, d = top.input("n", w), top.input("d", w)
    rq, crq = top.reg_feedback(w, name="rq")
    qq, cqq = top.reg_feedback(w, name="qq")
    start = top.input("start", 1)
    r, q = rq, qq
    for i in range(steps):
        o = top.instance(ds, {"r": r, "d": d, "q": q}, name=f"u_step{i}")
        r, q = o["r_out"], o["q_out"]
    crq(top.mux(start, r, top.const(0, w)))
    cqq(top.mux(start, q, n))
    top.output("q", qq)
    top.output("r", rq)
    return b, ["arith"]


def arith_popcount(w, name):
    b = DesignBuilder(name)
    p = popcount(b, w)
    top = b.module(name)
    x = top.input("x", w)
    o = top.instance(p, {"x": top.reg(x, name="xq")}, name="u_pop")
    top.output("n", top.reg(o["n"], name="nq"))
    return b, ["arith"]


def sort_network(n, w, name):
    b = DesignBuilder(name)
    cs = sorter_cell(b, w)
    top = b.module(name)
    v = [top.reg(top.input(f"x{i}", w), name=f"xq{i}") for i in range(n)]
    idx = 0
    for rnd in range(n):
        for i in range(rnd % 2, n - 1, 2):
            o = top.instance(cs, {"a": v[i], "b": v[i + 1]}, name=f"u_cs{idx}")
            idx += 1
            v[i], v[i + 1] = o["lo"], o["hi"]
    for i in range(n):
        top.output(f"y{i}", top.reg(v[i], name=f"yq{i}"))
    return b, ["misc"]


def gcd_block(w, name):
    b = DesignBuilder(name)
    g = gcd_core(b, w)
    top = b.module(name)
    a, c, load = top.input("a", w), top.input("b", w), top.input("load", 1)
    o = top.instance(g, {"a": a, "b": c, "load": load}, name="u_gcd")
    top.output("g", o["g"])
    top.output("done", o["done"])
    return b, ["arith"]


def adder4():
    """Plain 4-bit adder (no hierarchy, no registers)."""
    b = DesignBuilder("adder4")
    m = b.module("adder4")
    m.output("y", m.add(m.input("a", 4), m.input("b", 4)))
    return b, ["example"]


def benchmark_suite() -> dict[str, tuple]:
    """Name -> (DesignBuilder, tags) for the full labeled corpus."""
    s = {}

    def add(name, fn, *args, **kw):
        s[name] = fn(*args, name=name, **kw)

    for w, n, rich in ((4, 4, False), (8, 4, True), (8, 8, True), (12, 8, True), (16, 8, True), (16, 16, True),
                       (6, 4, True), (10, 4, False), (4, 2, True), (6, 8, False), (8, 2, False), (10, 8, True),
                       (12, 4, False), (14, 4, True), (16, 4, False), (4, 8, True)):
        add(f"cpu_w{w}_r{n}", cpu, w, n, rich)
    for w in (4, 6, 8, 10, 12, 16):
        add(f"cpu2_w{w}", dual_alu_cpu, w)
    for taps, w in ((2, 4), (3, 6), (4, 8), (4, 12), (6, 8), (2, 8), (3, 4), (3, 10), (5, 6), (8, 4)):
        add(f"fir_t{taps}_w{w}", dsp_fir, taps, w)
    for n, w in ((2, 4), (2, 8), (4, 6), (1, 6), (3, 4), (1, 10), (3, 6)):
        add(f"mac_n{n}_w{w}", dsp_mac_array, n, w)
    for n, w in ((2, 8), (4, 8), (3, 16), (6, 12), (1, 8), (2, 16), (3, 12), (5, 8), (8, 8)):
        add(f"crypto_n{n}_w{w}", crypto_rounds, n, w)
    for w, taps, uart in ((8, (1, 2), True), (16, (2, 5, 12), True), (12, (3,), False), (24, (1, 2, 7, 22), True), (6, (1,), False),
                           (20, (2, 3, 19), True), (32, (1, 5, 6, 31), False)):
        add(f"comm_w{w}", comm_block, w, taps, with_uart=uart)
    for w, ns, nc in ((4, 3, 1), (8, 5, 2), (12, 8, 3), (16, 6, 4), (6, 4, 2), (10, 10, 1), (20, 4, 3),
                       (24, 6, 2)):
        add(f"ctrl_w{w}_s{ns}", ctrl_block, w, ns, n_counters=nc)
    for n in (4, 6, 8, 12, 16, 24):
        add(f"arb_n{n}", arb_block, n)
    for w, sg in ((4, False), (6, True), (8, False), (10, True), (5, False), (7, True), (12, False)):
        add(f"mult_w{w}{'s' if sg else 'u'}", arith_mult, w, sg)
    for w, st in ((6, 2), (8, 4), (12, 3), (4, 4), (10, 2), (16, 2)):
        add(f"div_w{w}_s{st}", arith_divider, w, st)
    for w in (8, 12, 16, 24, 32):
        add(f"popc_w{w}", arith_popcount, w)
    for n, w in ((4, 4), (4, 8), (6, 6), (3, 6), (5, 4), (8, 4)):
        add(f"sort_n{n}_w{w}", sort_network, n, w)
    for w in (6, 8, 10, 12, 16, 20):
        add(f"gcd_w{w}", gcd_block, w)
    return s
