#pragma once

#include "daca/error.hpp"
#include "daca/instance.hpp"
#include "daca/ingest.hpp"
#include "daca/objective.hpp"
#include "daca/greedy.hpp"
#include "daca/baselines.hpp"
#include "daca/exact.hpp"
#include "daca/evaluate.hpp"
#include "daca/syngen.hpp"
#include "daca/io.hpp"
