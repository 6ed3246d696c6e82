# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cycle kernel; same semantics as ``_kernel_py.PyKernel``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, uint32_t
from libc.string cimport memcpy

cnp.import_array()

DEF COPY = 0
DEF ADD = 1
DEF SUB = 2
DEF MUL = 3
DEF CMUL = 4
DEF DIV = 5
DEF NEG = 6
DEF BITS = 7
DEF MUX = 8
DEF LT = 9
DEF CALLBACK = 10

cdef uint32_t CANONICAL_NAN = 0x7FC00000


cdef inline float tof(uint32_t w) noexcept nogil:
    cdef float x
    memcpy(&x, &w, 4)
    return x


cdef inline uint32_t tow(float x) noexcept nogil:
    cdef uint32_t w
    if x != x:
        return CANONICAL_NAN
    memcpy(&w, &x, 4)
    return w


cdef class CKernel:
    cdef public object netlist
    cdef public object callbacks
    cdef public long long t
    cdef public int ring
    cdef int mask
    cdef int n_ops
    cdef uint32_t[::1] mem
    cdef int32_t[::1] code, lat, in_ptr, in_slot, in_lag, out_ptr, out_slot
    cdef uint32_t[::1] cval

    backend = "cython"

    def __init__(self, netlist):
        self.netlist = netlist
        self.ring = netlist.ring
        self.mask = netlist.ring - 1
        self.callbacks = netlist.fresh_callbacks()
        mem = np.zeros(netlist.n_slots * self.ring, dtype=np.uint32)
        for s, w in netlist.const_slots.items():
            mem[s * self.ring:(s + 1) * self.ring] = w
        self.mem = mem
        a = netlist.arrays()
        self.code = a["code"]
        self.lat = a["lat"]
        self.cval = a["cval"]
        self.in_ptr = a["in_ptr"]
        self.in_slot = a["in_slot"]
        self.in_lag = a["in_lag"]
        self.out_ptr = a["out_ptr"]
        self.out_slot = a["out_slot"]
        self.n_ops = len(netlist.ops)
        self.t = 0

    cdef void _callback(self, int k):
        cdef int j
        cdef int R = self.ring
        cdef long long t = self.t
        vals = [self.mem[self.in_slot[j] * R + ((t - self.in_lag[j]) & self.mask)]
                for j in range(self.in_ptr[k], self.in_ptr[k + 1])]
        res = self.callbacks[self.cval[k]].step(vals)
        cdef int wpos = (t + self.lat[k]) & self.mask
        for j, w in zip(range(self.out_ptr[k], self.out_ptr[k + 1]), res):
            self.mem[self.out_slot[j] * R + wpos] = <uint32_t>(w & 0xFFFFFFFF)

    cdef void _eval(self):
        cdef int k, i0, R = self.ring, mask = self.mask
        cdef long long t = self.t
        cdef uint32_t a, b, r, c
        cdef float fa, fb
        for k in range(self.n_ops):
            c = self.code[k]
            if c == CALLBACK:
                self._callback(k)
                continue
            i0 = self.in_ptr[k]
            a = self.mem[self.in_slot[i0] * R + ((t - self.in_lag[i0]) & mask)]
            if c == COPY:
                r = a
            elif c == BITS:
                r = (a >> (self.cval[k] & 0xFF)) & <uint32_t>((1ULL << (self.cval[k] >> 8)) - 1)
            elif c == NEG:
                r = CANONICAL_NAN if (a & 0x7FFFFFFF) > 0x7F800000 else a ^ 0x80000000
            elif c == CMUL:
                r = tow(tof(a) * tof(self.cval[k]))
            else:
                b = self.mem[self.in_slot[i0 + 1] * R + ((t - self.in_lag[i0 + 1]) & mask)]
                fa = tof(a)
                fb = tof(b)
                if c == ADD:
                    r = tow(fa + fb)
                elif c == SUB:
                    r = tow(fa - fb)
                elif c == MUL:
                    r = tow(fa * fb)
                elif c == DIV:
                    r = tow(fa / fb)
                elif c == LT:
                    r = 1 if fa < fb else 0
                else:  # MUX
                    r = b if (self.mem[self.in_slot[i0 + 2] * R + ((t - self.in_lag[i0 + 2]) & mask)] & 1) else a
            self.mem[self.out_slot[self.out_ptr[k]] * R + ((t + self.lat[k]) & mask)] = r

    def step(self, in_slots, words):
        cdef int pos = self.t & self.mask
        for s, w in zip(in_slots, words):
            self.mem[s * self.ring + pos] = <uint32_t>(int(w) & 0xFFFFFFFF)
        self._eval()
        self.t += 1

    def read(self, slots, int lag=0):
        cdef int pos = (self.t - 1 - lag) & self.mask
        return [self.mem[s * self.ring + pos] for s in slots]

    def run(self, inputs, in_slots, out_slots):
        cdef cnp.ndarray[uint32_t, ndim=2] src = np.ascontiguousarray(inputs, dtype=np.uint32)
        cdef int32_t[::1] ins = np.asarray(in_slots, dtype=np.int32)
        cdef int32_t[::1] outs = np.asarray(out_slots, dtype=np.int32)
        cdef Py_ssize_t n = src.shape[0], i, j
        cdef int R = self.ring, pos
        out = np.zeros((n, len(out_slots)), dtype=np.uint32)
        cdef uint32_t[:, ::1] dst = out
        for i in range(n):
            pos = self.t & self.mask
            for j in range(ins.shape[0]):
                self.mem[ins[j] * R + pos] = src[i, j]
            self._eval()
            for j in range(outs.shape[0]):
                dst[i, j] = self.mem[outs[j] * R + pos]
            self.t += 1
        return out
