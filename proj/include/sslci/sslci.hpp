#pragma once

#include "sslci/errors.hpp"
#include "sslci/matrix_stats.hpp"
#include "sslci/random.hpp"
#include "sslci/generators.hpp"
#include "sslci/ssl_core.hpp"
#include "sslci/ci_analysis.hpp"
#include "sslci/ace.hpp"
#include "sslci/topic_model.hpp"
#include "sslci/harness.hpp"
#include "sslci/io.hpp"
#include "sslci/selfcheck.hpp"
