"""Reference mean gaps and outcome bounds used to parameterize presets.

Each row: ``(flash_h1, flash_h0, pro_h1, pro_h0, palm2_h1, palm2_h0)``.
The ``h1`` entries compare human reference scores against machine text
from that source model; the ``h0`` entries compare two human corpora
(and double as the oracle ``epsilon``).
"""

SOURCES = ("flash", "pro", "palm2")

SCORE_FUNCTIONS = (
    "fastdetect",
    "detectgpt",
    "npr",
    "lrr",
    "logrank",
    "likelihood",
    "entropy",
    "dnagpt",
    "roberta-base",
    "roberta-large",
)

# mean gap |mu_x - mu_y| over 500 texts per corpus
DELTA = {
    "neo27": {
        "fastdetect": (2.4786, 0.3634, 1.2992, 0.3660, 3.6338, 0.4232),
        "detectgpt": (0.3917, 0.0202, 0.3101, 0.0274, 0.6050, 0.0052),
        "npr": (0.0232, 0.0014, 0.0155, 0.0015, 0.0398, 0.0005),
        "lrr": (0.1042, 0.0324, 0.0289, 0.0328, 0.2606, 0.0370),
        "logrank": (0.2590, 0.0543, 0.1312, 0.0561, 0.4995, 0.0743),
        "likelihood": (0.3882, 0.0618, 0.2170, 0.0652, 0.7641, 0.0948),
        "entropy": (0.0481, 0.0766, 0.0067, 0.0728, 0.1878, 0.0483),
        "dnagpt": (0.1937, 0.0968, 0.0957, 0.1032, 0.4086, 0.1083),
        "roberta-base": (0.2265, 0.0461, 0.0287, 0.0491, 0.6343, 0.0370),
        "roberta-large": (0.0885, 0.0240, 0.0249, 0.0250, 0.4197, 0.0281),
    },
    "gemma2b": {
        "fastdetect": (2.1412, 0.5889, 0.9321, 0.5977, 3.7314, 0.6758),
        "detectgpt": (0.7146, 0.3538, 0.6193, 0.3530, 0.8403, 0.3360),
        "npr": (0.0632, 0.0254, 0.0477, 0.0249, 0.1005, 0.0232),
        "lrr": (0.1604, 0.0129, 0.0825, 0.0112, 0.3810, 0.0038),
        "logrank": (0.3702, 0.0973, 0.2527, 0.0932, 0.5917, 0.0687),
        "likelihood": (0.6093, 0.1832, 0.4276, 0.1761, 0.9705, 0.1358),
        "entropy": (0.2668, 0.2743, 0.2745, 0.2690, 0.4543, 0.2347),
        "dnagpt": (0.2279, 0.0353, 0.1144, 0.0491, 0.4072, 0.0681),
        "roberta-base": (0.2265, 0.0461, 0.0287, 0.0491, 0.6343, 0.0370),
        "roberta-large": (0.0885, 0.0240, 0.0249, 0.0250, 0.4197, 0.0281),
    },
}

# max_{i,j} |phi(x_i) - phi(y_j)| over the same corpora
BOUND = {
    "neo27": {
        "fastdetect": (7.6444, 5.9956, 6.5104, 6.1546, 9.1603, 5.8870),
        "detectgpt": (2.3985, 2.3102, 2.1416, 2.2683, 2.6095, 2.7447),
        "npr": (0.1500, 0.1436, 0.1295, 0.1465, 0.1975, 0.1353),
        "lrr": (0.8129, 0.5877, 0.6400, 0.5875, 0.9793, 0.5421),
        "logrank": (1.5861, 1.6355, 1.4065, 1.6355, 1.7298, 1.6355),
        "likelihood": (2.3004, 2.4540, 1.9491, 2.4540, 2.6607, 2.5559),
        "entropy": (1.6523, 1.6630, 1.5890, 1.6702, 1.9538, 1.6265),
        "dnagpt": (1.5063, 1.5425, 1.3621, 1.5649, 1.5455, 1.6348),
        "roberta-base": (0.9997, 0.9995, 0.9995, 0.9995, 0.9997, 0.9996),
        "roberta-large": (0.9983, 0.9856, 0.8945, 0.8945, 0.9992, 0.8608),
    },
    "gemma2b": {
        "fastdetect": (7.7651, 6.5619, 7.3119, 6.4343, 8.6156, 6.5640),
        "detectgpt": (2.9905, 2.5449, 2.3846, 2.4274, 2.6807, 2.7878),
        "npr": (0.3357, 0.2196, 0.3552, 0.2318, 0.4118, 0.2403),
        "lrr": (1.1189, 0.7123, 0.8780, 0.7109, 1.2897, 0.7717),
        "logrank": (1.5731, 1.6467, 1.4713, 1.6468, 1.7538, 1.6397),
        "likelihood": (2.4934, 2.4229, 2.3944, 2.4228, 2.8379, 2.4694),
        "entropy": (1.9791, 1.9117, 1.8572, 1.8854, 2.1359, 1.9210),
        "dnagpt": (1.3214, 1.4808, 1.2891, 1.4607, 1.5014, 1.6296),
        "roberta-base": (0.9997, 0.9995, 0.9995, 0.9995, 0.9997, 0.9996),
        "roberta-large": (0.9983, 0.9856, 0.8945, 0.8945, 0.9992, 0.8608),
    },
}

# reported ratio (Delta - eps) / (d - eps), Scenario 1, same layout as SOURCES
RATIO = {
    "neo27": {
        "fastdetect": (0.2905, 0.1519, 0.3675),
        "entropy": (-0.0181, -0.0436, 0.0732),
    },
}
