// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmarks for the simulator live in `benches/`.
