# Services package for the marchenko app
