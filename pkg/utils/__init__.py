# Utils package for the B-spline reconstruction toolkit
