// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#include "tmoe/cli.hpp"

int main(int argc, char** argv) { return tmoe::dispatch(argc, argv); }
