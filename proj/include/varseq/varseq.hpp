#pragma once

#include "varseq/jet_space.hpp"
#include "varseq/expr.hpp"
#include "varseq/forms.hpp"
#include "varseq/variational.hpp"
#include "varseq/prolong.hpp"
#include "varseq/probe.hpp"
#include "varseq/render.hpp"
#include "varseq/dsl.hpp"
#include "varseq/cli.hpp"
