// Genz-Keister nested Hermite extensions, rescaled to the standard normal
// density (nodes multiplied by sqrt(2), weights divided by sqrt(pi)).

/// Nonnegative nodes shared across all levels, ascending.
pub(super) const POSITIVE_NODES: [f64; 18] = [
    0.0,
    2.4899229757996061e-1,
    7.4109534999454082e-1,
    1.2304236340273059,
    1.7320508075688771,
    2.2336260616769417,
    2.5960831150492021,
    2.8612795760570582,
    3.2053337944991939,
    3.6353185190372783,
    4.1849560176727323,
    4.7364330859522965,
    5.187016039913656,
    5.6981777684881095,
    6.363394494336369,
    7.1221067008046167,
    7.9807717985905606,
    9.016939789890302,
];

/// Per level: `(index into POSITIVE_NODES, weight)`; a nonzero node carries the
/// same weight at its mirror image.
pub(super) const LEVELS: [&[(usize, f64)]; 5] = [
    &[
        (0, 0.99999999999999992),
    ],
    &[
        (0, 0.66666666666666657),
        (4, 0.16666666666666664),
    ],
    &[
        (0, 0.25396825396825404),
        (2, 0.27007432957793773),
        (4, 0.094850948509485119),
        (7, 0.0079963254708935283),
        (10, 9.4269457556517464e-5),
    ],
    &[
        (0, 0.30346719985420623),
        (2, 0.20832499164960876),
        (3, 0.061151730125247715),
        (4, 0.064096054686807603),
        (6, 0.018085234254798459),
        (7, -0.006337224793373757),
        (8, 0.0028848804365067559),
        (10, 6.0123369459847993e-5),
        (12, 6.0948087314689831e-7),
        (14, 8.6296846022298628e-10),
    ],
    &[
        (0, 0.00051489450806921375),
        (1, 0.19176011588804432),
        (2, 0.14807083115521584),
        (3, 0.092364726716986342),
        (4, 0.045273685465150387),
        (5, 0.01567347375185115),
        (6, 0.0031554462691875508),
        (7, 0.0023113452403522069),
        (8, 0.00081895392750226724),
        (9, 0.0002752421411678513),
        (10, 3.5729348198975332e-5),
        (11, 2.7342206801187887e-6),
        (12, 2.467642134579814e-7),
        (13, 2.1394194479561059e-8),
        (14, 4.6011760348655911e-10),
        (15, 3.0972223576062992e-12),
        (16, 5.4500412650638123e-15),
        (17, 1.0541326582334014e-18),
    ],
];
